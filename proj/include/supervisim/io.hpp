#pragma once

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "supervisim/core.hpp"
#include "supervisim/engine.hpp"
#include "supervisim/forecast.hpp"
#include "supervisim/ingest.hpp"
#include "supervisim/rng.hpp"

namespace supervisim {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Number and file helpers
// ---------------------------------------------------------------------------

/// Fixed six-decimal rendering used for every emitted real.
inline std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string checksum_hex(std::string_view content) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(content)));
  return buf;
}

/// Local wall-clock time as YYYYMMDD_HHMMSS.
inline std::string current_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d_%H%M%S", &tm);
  return buf;
}

inline std::string run_label(std::uint64_t run_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02llu", static_cast<unsigned long long>(run_index + 1));
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration documents
// ---------------------------------------------------------------------------

inline ordered_json profile_to_json(const SourceProfile& p) {
  ordered_json prior = ordered_json::object();
  for (const auto& [rt, w] : p.risk_prior) prior[rt] = w;
  return {{"lambda", p.lambda},       {"cost_mu", p.cost_mu},     {"cost_sigma", p.cost_sigma},
          {"acc_alpha", p.acc_alpha}, {"acc_beta", p.acc_beta},   {"dmg_shape", p.dmg_shape},
          {"dmg_scale", p.dmg_scale}, {"damage_model", to_string(p.damage_model)},
          {"risk_prior", prior}};
}

inline ordered_json feedback_to_json(const FeedbackConfig& f) {
  ordered_json j = {{"gamma_I", f.gamma_I}, {"beta_I", f.beta_I}, {"I_min", f.I_min},
                    {"I_max", f.I_max},     {"gamma_O", f.gamma_O}, {"delta_O", f.delta_O},
                    {"O_min", f.O_min},     {"O_max", f.O_max}};
  j["initial_incentive"] = ordered_json::object();
  for (Source s : kAllSources) j["initial_incentive"][std::string(to_string(s))] = f.initial_incentive[index_of(s)];
  j["initial_occurrence"] = f.initial_occurrence;
  if (!f.initial_occurrence_by_type.empty()) {
    j["initial_occurrence_by_type"] = ordered_json::object();
    for (const auto& [rt, o] : f.initial_occurrence_by_type) j["initial_occurrence_by_type"][rt] = o;
  }
  j["recover_only_when_unmitigated"] = f.recover_only_when_unmitigated;
  return j;
}

inline ordered_json config_to_json(const SimulationConfig& c) {
  ordered_json j = {{"duration_months", c.duration_months},
                    {"observation_months", c.observation_months},
                    {"capacity_fraction", c.capacity_fraction},
                    {"policy", to_string(c.policy)},
                    {"master_seed", c.master_seed},
                    {"fifo_skip_mode", c.fifo_skip_mode},
                    {"drain", c.drain},
                    {"first_processed_log", c.first_processed_log}};
  j["profiles"] = ordered_json::object();
  for (const auto& p : c.profiles) j["profiles"][std::string(to_string(p.source))] = profile_to_json(p);
  j["feedback"] = c.feedback ? feedback_to_json(*c.feedback) : ordered_json(nullptr);
  return j;
}

namespace detail {

template <class T>
T get_field(const ordered_json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(field, "wrong type");
  }
}

inline void apply_profile(SourceProfile& p, const ordered_json& j, const std::string& base) {
  if (!j.is_object()) throw ValidationError(base, "must be an object");
  for (const auto& [key, v] : j.items()) {
    const std::string f = base + "." + key;
    if (key == "lambda") p.lambda = get_field<double>(v, f);
    else if (key == "cost_mu") p.cost_mu = get_field<double>(v, f);
    else if (key == "cost_sigma") p.cost_sigma = get_field<double>(v, f);
    else if (key == "acc_alpha") p.acc_alpha = get_field<double>(v, f);
    else if (key == "acc_beta") p.acc_beta = get_field<double>(v, f);
    else if (key == "dmg_shape") p.dmg_shape = get_field<double>(v, f);
    else if (key == "dmg_scale") p.dmg_scale = get_field<double>(v, f);
    else if (key == "damage_model") p.damage_model = parse_damage_model(get_field<std::string>(v, f));
    else if (key == "risk_prior") {
      if (!v.is_object()) throw ValidationError(f, "must be an object of label: probability");
      p.risk_prior.clear();
      for (const auto& [rt, w] : v.items()) p.risk_prior.emplace_back(rt, get_field<double>(w, f + "." + rt));
    } else {
      throw ValidationError(f, "unknown field");
    }
  }
}

inline FeedbackConfig parse_feedback(const ordered_json& j) {
  FeedbackConfig f;
  if (j.is_boolean()) return f;
  if (!j.is_object()) throw ValidationError("feedback", "must be an object, true, or null");
  for (const auto& [key, v] : j.items()) {
    const std::string field = "feedback." + key;
    if (key == "gamma_I") f.gamma_I = get_field<double>(v, field);
    else if (key == "beta_I") f.beta_I = get_field<double>(v, field);
    else if (key == "I_min") f.I_min = get_field<double>(v, field);
    else if (key == "I_max") f.I_max = get_field<double>(v, field);
    else if (key == "gamma_O") f.gamma_O = get_field<double>(v, field);
    else if (key == "delta_O") f.delta_O = get_field<double>(v, field);
    else if (key == "O_min") f.O_min = get_field<double>(v, field);
    else if (key == "O_max") f.O_max = get_field<double>(v, field);
    else if (key == "initial_occurrence") f.initial_occurrence = get_field<double>(v, field);
    else if (key == "recover_only_when_unmitigated") f.recover_only_when_unmitigated = get_field<bool>(v, field);
    else if (key == "initial_incentive") {
      if (v.is_number()) {
        f.initial_incentive.fill(v.get<double>());
      } else {
        for (const auto& [src, x] : v.items())
          f.initial_incentive[index_of(parse_source(src))] = get_field<double>(x, field + "." + src);
      }
    } else if (key == "initial_occurrence_by_type") {
      for (const auto& [rt, x] : v.items()) f.initial_occurrence_by_type[rt] = get_field<double>(x, field + "." + rt);
    } else {
      throw ValidationError(field, "unknown field");
    }
  }
  return f;
}

}  // namespace detail

/// Builds a SimulationConfig from a JSON document. Absent fields keep their
/// defaults; "preset" and "damage_model" choose the starting profiles before
/// any per-profile overrides apply. The result is validated.
inline SimulationConfig config_from_json(const ordered_json& j) {
  using detail::get_field;
  if (!j.is_object()) throw ValidationError("config", "must be a JSON object");
  SimulationConfig c;
  Preset preset = Preset::main_text;
  DamageModel model = DamageModel::lomax;
  if (j.contains("preset")) preset = parse_preset(get_field<std::string>(j["preset"], "preset"));
  if (j.contains("damage_model"))
    model = parse_damage_model(get_field<std::string>(j["damage_model"], "damage_model"));
  c.profiles = default_profiles(preset, model);

  for (const auto& [key, v] : j.items()) {
    if (key == "preset" || key == "damage_model") continue;
    if (key == "duration_months") c.duration_months = get_field<int>(v, key);
    else if (key == "observation_months") c.observation_months = get_field<int>(v, key);
    else if (key == "capacity_fraction") c.capacity_fraction = get_field<double>(v, key);
    else if (key == "policy") c.policy = parse_policy(get_field<std::string>(v, key));
    else if (key == "master_seed") c.master_seed = get_field<std::uint64_t>(v, key);
    else if (key == "fifo_skip_mode") c.fifo_skip_mode = get_field<bool>(v, key);
    else if (key == "drain") c.drain = get_field<bool>(v, key);
    else if (key == "first_processed_log") c.first_processed_log = get_field<int>(v, key);
    else if (key == "feedback") {
      if (v.is_null() || (v.is_boolean() && !v.get<bool>())) c.feedback.reset();
      else c.feedback = detail::parse_feedback(v);
    } else if (key == "profiles") {
      if (!v.is_object()) throw ValidationError("profiles", "must be an object keyed by source");
      for (const auto& [src, pj] : v.items())
        detail::apply_profile(c.profiles[index_of(parse_source(src))], pj, "profiles." + src);
    } else {
      throw ValidationError(key, "unknown field");
    }
  }
  return validate_config(c);
}

inline SimulationConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config", e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Report CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kReportCsvHeader =
    "report_id,arrival_month,processed_month,source,risk_type,supervision_cost,accessibility,"
    "potential_damage,priority";

/// Ordered by processed month (unprocessed last), then id.
inline std::string reports_to_csv(std::vector<Report> reports) {
  std::sort(reports.begin(), reports.end(), [](const Report& a, const Report& b) {
    const int am = a.processed_month.value_or(std::numeric_limits<int>::max());
    const int bm = b.processed_month.value_or(std::numeric_limits<int>::max());
    if (am != bm) return am < bm;
    return a.id < b.id;
  });
  std::string out(kReportCsvHeader);
  out += '\n';
  for (const auto& r : reports) {
    out += std::to_string(r.id) + ',' + std::to_string(r.arrival_month) + ',' +
           (r.processed_month ? std::to_string(*r.processed_month) : std::string()) + ',' +
           std::string(to_string(r.source)) + ',' + csv_escape(r.risk_type) + ',' +
           format_real(r.supervision_cost) + ',' + format_real(r.accessibility) + ',' +
           format_real(r.potential_damage) + ',' + format_real(r.priority) + '\n';
  }
  return out;
}

/// Inverse of reports_to_csv, to serialized precision. Priority is read as
/// written rather than recomputed.
inline std::vector<Report> reports_from_csv(std::string_view text) {
  auto rows = detail::split_csv(text);
  std::vector<Report> out;
  if (rows.empty()) return out;
  std::string header;
  for (std::size_t i = 0; i < rows[0].second.size(); ++i) header += (i ? "," : "") + rows[0].second[i];
  if (header != kReportCsvHeader) throw ValidationError("header", "unexpected report CSV header");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& [line, c] = rows[i];
    if (c.size() != 9) throw ParseError(line, "csv", "expected 9 fields");
    auto num = [&](std::size_t k, const char* name) {
      auto v = detail::parse_double(c[k]);
      if (!v) throw ParseError(line, name, "not a number");
      return *v;
    };
    auto integer = [&](std::size_t k, const char* name) {
      auto v = detail::parse_int(c[k]);
      if (!v) throw ParseError(line, name, "not an integer");
      return *v;
    };
    Report r;
    r.id = static_cast<ReportId>(integer(0, "report_id"));
    r.arrival_month = static_cast<int>(integer(1, "arrival_month"));
    if (!detail::trim(c[2]).empty()) r.processed_month = static_cast<int>(integer(2, "processed_month"));
    r.source = parse_source(c[3]);
    r.risk_type = c[4];
    r.supervision_cost = num(5, "supervision_cost");
    r.accessibility = num(6, "accessibility");
    r.potential_damage = num(7, "potential_damage");
    r.priority = num(8, "priority");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics CSV and summaries
// ---------------------------------------------------------------------------

inline std::string metrics_to_csv(const SimulationResult& result) {
  std::set<RiskType> types = risk_types_of(result.config.profiles);
  for (const auto& m : result.metrics)
    for (const auto& [rt, n] : m.processed_by_risk_type) types.insert(rt);
  const bool with_feedback = !result.metrics.empty() && result.metrics.front().feedback.has_value();
  std::set<RiskType> occ_types;
  if (with_feedback)
    for (const auto& [rt, o] : result.metrics.front().feedback->occurrence) occ_types.insert(rt);

  std::ostringstream out;
  out << "month,arrivals";
  for (Source s : kAllSources) out << ",arrivals_" << to_string(s);
  out << ",processed";
  for (Source s : kAllSources) out << ",processed_" << to_string(s);
  out << ",backlog,capacity,capacity_used,mean_cost,mean_accessibility,mean_damage,mean_priority,"
         "damage_mitigated";
  for (const auto& rt : types) out << ',' << csv_escape("processed_" + rt);
  out << ",first_processed";
  if (with_feedback) {
    for (Source s : kAllSources) out << ",I_" << to_string(s);
    for (const auto& rt : occ_types) out << ',' << csv_escape("O_" + rt);
  }
  out << '\n';

  for (const auto& m : result.metrics) {
    out << m.month << ',' << m.arrivals;
    for (Source s : kAllSources) out << ',' << m.arrivals_by_source[index_of(s)];
    out << ',' << m.processed;
    for (Source s : kAllSources) out << ',' << m.processed_by_source[index_of(s)];
    out << ',' << m.backlog << ',' << format_real(m.capacity) << ',' << format_real(m.capacity_used) << ','
        << format_real(m.mean_cost) << ',' << format_real(m.mean_accessibility) << ','
        << format_real(m.mean_damage) << ',' << format_real(m.mean_priority) << ','
        << format_real(m.damage_mitigated);
    for (const auto& rt : types) {
      auto it = m.processed_by_risk_type.find(rt);
      out << ',' << (it == m.processed_by_risk_type.end() ? 0 : it->second);
    }
    out << ',';
    for (std::size_t i = 0; i < m.first_processed.size(); ++i) out << (i ? ";" : "") << m.first_processed[i];
    if (with_feedback) {
      for (Source s : kAllSources) out << ',' << format_real(m.feedback->incentive[index_of(s)]);
      for (const auto& rt : occ_types) out << ',' << format_real(m.feedback->occurrence.at(rt));
    }
    out << '\n';
  }
  return out.str();
}

namespace detail {

/// Rounds reals to the emitted precision so JSON output is byte-stable.
inline double rounded(double x) { return std::stod(format_real(x)); }

}  // namespace detail

inline ordered_json run_summary_json(const SimulationResult& result) {
  const auto s = summarize(std::span<const SimulationResult>(&result, 1));
  ordered_json j;
  j["policy"] = to_string(result.config.policy);
  j["seed"] = result.seed();
  j["run_index"] = result.run_index;
  j["months"] = result.metrics.size();
  j["capacity"] = detail::rounded(result.capacity);
  j["generated"] = s.generated;
  j["processed"] = s.processed;
  j["final_backlog"] = result.backlog.size();
  j["mean_cost"] = detail::rounded(s.mean_cost);
  j["mean_accessibility"] = detail::rounded(s.mean_accessibility);
  j["mean_damage"] = detail::rounded(s.mean_damage);
  j["mean_priority"] = detail::rounded(s.mean_priority);
  j["source_share"] = ordered_json::object();
  for (Source src : kAllSources) j["source_share"][std::string(to_string(src))] = detail::rounded(s.source_share[index_of(src)]);
  j["risk_type_share"] = ordered_json::object();
  for (const auto& [rt, v] : s.risk_type_share) j["risk_type_share"][rt] = detail::rounded(v);
  j["warnings"] = result.warnings;
  j["config"] = config_to_json(result.config);
  return j;
}

inline ordered_json batch_summary_json(const BatchSummary& s) {
  ordered_json j;
  j["policy"] = to_string(s.policy);
  j["runs"] = s.n_runs;
  j["generated"] = s.generated;
  j["processed"] = s.processed;
  j["mean_cost"] = detail::rounded(s.mean_cost);
  j["mean_accessibility"] = detail::rounded(s.mean_accessibility);
  j["mean_damage"] = detail::rounded(s.mean_damage);
  j["mean_priority"] = detail::rounded(s.mean_priority);
  j["mean_capacity"] = detail::rounded(s.mean_capacity);
  j["source_share"] = ordered_json::object();
  for (Source src : kAllSources) j["source_share"][std::string(to_string(src))] = detail::rounded(s.source_share[index_of(src)]);
  j["risk_type_share"] = ordered_json::object();
  for (const auto& [rt, v] : s.risk_type_share) j["risk_type_share"][rt] = detail::rounded(v);
  j["mean_backlog"] = ordered_json::array();
  for (double b : s.mean_backlog) j["mean_backlog"].push_back(detail::rounded(b));
  return j;
}

// ---------------------------------------------------------------------------
// Forecast series CSV
// ---------------------------------------------------------------------------

/// Reads "month,count" rows; a non-numeric second cell in the first row is
/// taken as a header.
inline IncidentSeries series_from_csv(std::string_view text) {
  IncidentSeries s;
  auto rows = detail::split_csv(text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [line, c] = rows[i];
    if (c.size() == 1 && detail::trim(c[0]).empty()) continue;
    if (c.size() < 2) throw ParseError(line, "series", "expected month,count");
    auto v = detail::parse_double(c[1]);
    if (!v) {
      if (i == 0) continue;
      throw ParseError(line, "count", "not a number");
    }
    s.months.emplace_back(detail::trim(c[0]));
    s.counts.push_back(*v);
  }
  validate_series(s);
  return s;
}

inline std::string scenarios_to_csv(const ScenarioForecast& f) {
  std::string out = "month,worst,average,best\n";
  for (std::size_t i = 0; i < f.months.size(); ++i)
    out += csv_escape(f.months[i]) + ',' + format_real(f.worst[i]) + ',' + format_real(f.average[i]) + ',' +
           format_real(f.best[i]) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct EmittedFile {
  std::string name;
  std::string checksum;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::vector<EmittedFile> files;

  /// Writes `content` under the output directory and records it.
  void emit(const std::string& name, const std::string& content) {
    write_file(output_dir / name, content);
    files.push_back({name, checksum_hex(content), content.size()});
  }

  ordered_json to_json() const {
    ordered_json j;
    j["command"] = command;
    j["config"] = config_path;
    j["seed"] = seed;
    j["output_dir"] = output_dir.string();
    j["files"] = ordered_json::array();
    for (const auto& f : files) j["files"].push_back({{"name", f.name}, {"checksum", f.checksum}, {"bytes", f.bytes}});
    return j;
  }
};

}  // namespace supervisim
