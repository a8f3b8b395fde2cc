#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "supervisim/core.hpp"
#include "supervisim/engine.hpp"

namespace supervisim {

inline constexpr std::array<std::string_view, 7> kScoreCategories{
    "toxicity", "severe_toxicity", "obscene", "identity_attack",
    "insult",   "threat",          "sexual_explicit"};

/// A malformed input row. The message carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& field, const std::string& what)
      : ValidationError(field, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct ReplayRecord {
  std::string record_id;
  std::optional<std::chrono::sys_seconds> timestamp;
  int dialogue_turns = 1;
  std::map<std::string, double> scores;
};

/// Column / key names for each required field. Score columns are keyed by
/// category name. In JSON-lines input a dotted name ("scores.threat")
/// addresses a nested object.
struct RecordSchema {
  std::string record_id = "record_id";
  std::string timestamp = "timestamp";
  std::string turns = "turns";
  std::map<std::string, std::string> score_columns = [] {
    std::map<std::string, std::string> m;
    for (auto c : kScoreCategories) m.emplace(std::string(c), std::string(c));
    return m;
  }();

  /// Reads overrides from a JSON object with keys record_id, timestamp,
  /// turns and an optional "scores" object mapping category to column.
  static RecordSchema from_json(const nlohmann::json& j) {
    RecordSchema s;
    if (!j.is_object()) throw ValidationError("schema", "must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "record_id") s.record_id = value.get<std::string>();
      else if (key == "timestamp") s.timestamp = value.get<std::string>();
      else if (key == "turns") s.turns = value.get<std::string>();
      else if (key == "scores") {
        for (const auto& [cat, col] : value.items()) {
          if (!s.score_columns.count(cat)) throw ValidationError("schema.scores", "unknown category '" + cat + "'");
          s.score_columns[cat] = col.get<std::string>();
        }
      } else {
        throw ValidationError("schema", "unknown key '" + key + "'");
      }
    }
    return s;
  }
};

enum class InputFormat { automatic, csv, jsonl };

// ---------------------------------------------------------------------------
// Field parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses an ISO-8601 date or date-time. Accepts YYYY-MM-DD optionally
/// followed by 'T' or ' ' and HH:MM[:SS[.frac]], then an optional 'Z' or
/// +HH:MM / +HHMM offset. The result is UTC.
inline std::optional<std::chrono::sys_seconds> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  s = detail::trim(s);
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    if (pos + len > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  auto y = num(0, 4), mo = num(5, 2), d = num(8, 2);
  if (!y || !mo || !d || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  sys_seconds t = sys_days{ymd};
  std::size_t pos = 10;
  if (pos == s.size()) return t;
  if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
  ++pos;
  auto hh = num(pos, 2), mm = num(pos + 3, 2);
  if (!hh || !mm || pos + 2 >= s.size() || s[pos + 2] != ':' || *hh > 23 || *mm > 59) return std::nullopt;
  t += hours{*hh} + minutes{*mm};
  pos += 5;
  if (pos < s.size() && s[pos] == ':') {
    auto ss = num(pos + 1, 2);
    if (!ss || *ss > 60) return std::nullopt;
    t += seconds{*ss};
    pos += 3;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
  }
  if (pos == s.size()) return t;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return t;
  if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    auto oh = num(pos + 1, 2);
    std::optional<int> om;
    std::size_t end = 0;
    if (pos + 3 < s.size() && s[pos + 3] == ':') { om = num(pos + 4, 2); end = pos + 6; }
    else if (pos + 3 == s.size()) { om = 0; end = pos + 3; }
    else { om = num(pos + 3, 2); end = pos + 5; }
    if (!oh || !om || end != s.size()) return std::nullopt;
    return t - sign * (hours{*oh} + minutes{*om});
  }
  return std::nullopt;
}

/// Months since year 0 of the UTC calendar month containing `t`.
inline long long calendar_month_index(std::chrono::sys_seconds t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  return static_cast<long long>(static_cast<int>(ymd.year())) * 12 +
         static_cast<long long>(static_cast<unsigned>(ymd.month())) - 1;
}

// ---------------------------------------------------------------------------
// Record construction
// ---------------------------------------------------------------------------

namespace detail {

/// Field lookup shared by both input formats; returns nullopt when absent.
template <class Lookup>
ReplayRecord build_record(std::size_t line, const RecordSchema& schema, Lookup&& lookup) {
  ReplayRecord rec;
  auto id = lookup(schema.record_id);
  if (!id || trim(*id).empty()) throw ParseError(line, schema.record_id, "missing record id");
  rec.record_id = std::string(trim(*id));

  if (auto ts = lookup(schema.timestamp); ts && !trim(*ts).empty()) {
    rec.timestamp = parse_iso8601(*ts);
    if (!rec.timestamp) throw ParseError(line, schema.timestamp, "not an ISO-8601 date-time: '" + *ts + "'");
  }

  auto turns_text = lookup(schema.turns);
  if (!turns_text) throw ParseError(line, schema.turns, "missing dialogue turns");
  auto turns = parse_int(*turns_text);
  if (!turns) {
    // Accept integral floats such as "3.0".
    auto as_double = parse_double(*turns_text);
    if (as_double && *as_double == std::floor(*as_double)) turns = static_cast<long long>(*as_double);
  }
  if (!turns || *turns < 1) throw ParseError(line, schema.turns, "dialogue turns must be an integer >= 1");
  rec.dialogue_turns = static_cast<int>(std::min<long long>(*turns, 1'000'000'000));

  for (const auto& [category, column] : schema.score_columns) {
    auto text = lookup(column);
    if (!text) throw ParseError(line, column, "missing score");
    auto v = parse_double(*text);
    if (!v) throw ParseError(line, column, "not a number: '" + *text + "'");
    if (*v < 0.0 || *v > 1.0) throw ParseError(line, column, "score " + *text + " outside [0, 1]");
    rec.scores[category] = *v;
  }
  return rec;
}

/// Splits RFC-4180 CSV text into rows. Quoted fields may span lines.
/// Each row carries the 1-based line number it starts on.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> split_csv(std::string_view text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, any = false;
  std::size_t line = 1, row_line = 1;
  auto end_row = [&] {
    if (any || !field.empty() || !fields.empty()) {
      fields.push_back(std::move(field));
      rows.emplace_back(row_line, std::move(fields));
    }
    fields.clear();
    field.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') { field += '"'; ++i; }
        else quoted = false;
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true; any = true; break;
      case ',': fields.push_back(std::move(field)); field.clear(); any = true; break;
      case '\r': break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default: field += c; any = true;
    }
  }
  if (quoted) throw ParseError(row_line, "csv", "unterminated quoted field");
  end_row();
  return rows;
}

inline std::vector<ReplayRecord> parse_csv(std::string_view text, const RecordSchema& schema) {
  auto rows = split_csv(text);
  std::vector<ReplayRecord> out;
  if (rows.empty()) return out;
  const auto& header = rows.front().second;
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(trim(header[i])), i);

  auto require_column = [&](const std::string& name) {
    if (!column.count(name)) throw ValidationError("schema", "missing required column '" + name + "'");
  };
  require_column(schema.record_id);
  require_column(schema.turns);
  for (const auto& [cat, col] : schema.score_columns) require_column(col);

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, cells] = rows[r];
    if (cells.size() == 1 && trim(cells[0]).empty()) continue;  // blank line
    if (cells.size() != header.size())
      throw ParseError(line, "csv", "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
    out.push_back(build_record(line, schema, [&](const std::string& name) -> std::optional<std::string> {
      auto it = column.find(name);
      if (it == column.end()) return std::nullopt;
      return cells[it->second];
    }));
  }
  return out;
}

inline const nlohmann::json* json_path(const nlohmann::json& obj, std::string_view path) {
  if (auto it = obj.find(std::string(path)); it != obj.end()) return &*it;
  const nlohmann::json* cur = &obj;
  while (!path.empty()) {
    const auto dot = path.find('.');
    const std::string key(path.substr(0, dot));
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
  }
  return cur;
}

inline std::vector<ReplayRecord> parse_jsonl(std::string_view text, const RecordSchema& schema) {
  std::vector<ReplayRecord> out;
  std::size_t line = 0, start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (trim(raw).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line, "json", e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "json", "expected an object per line");
    out.push_back(build_record(line, schema, [&](const std::string& name) -> std::optional<std::string> {
      const auto* v = json_path(obj, name);
      if (v == nullptr || v->is_null()) return std::nullopt;
      if (v->is_string()) return v->get<std::string>();
      if (v->is_number_integer()) return std::to_string(v->get<long long>());
      if (v->is_number()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v->get<double>());
        return std::string(buf);
      }
      return v->dump();
    }));
  }
  return out;
}

}  // namespace detail

/// Parses delimited text (comma-separated with a header row) or JSON-lines.
/// Rows are returned in input order; an empty input yields no records.
inline std::vector<ReplayRecord> parse_records(std::istream& in, const RecordSchema& schema = {},
                                               InputFormat format = InputFormat::automatic) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("failed to read replay input");
  if (format == InputFormat::automatic) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    format = text[first] == '{' ? InputFormat::jsonl : InputFormat::csv;
  }
  return format == InputFormat::jsonl ? detail::parse_jsonl(text, schema) : detail::parse_csv(text, schema);
}

// ---------------------------------------------------------------------------
// Mapping
// ---------------------------------------------------------------------------

struct ThresholdCondition {
  std::string category;
  double threshold = 0.5;  // matches when score > threshold
};

/// Matches when any of its conditions holds.
struct ThresholdRule {
  std::vector<ThresholdCondition> any_of;
  RiskType risk_type;
};

inline std::vector<ThresholdRule> default_threshold_table() {
  return {
      {{{"threat", 0.5}, {"severe_toxicity", 0.7}}, risk::security},
      {{{"sexual_explicit", 0.5}}, risk::compliance_legal},
      {{{"identity_attack", 0.5}, {"insult", 0.5}}, risk::bias_fairness},
  };
}

struct MappingConfig {
  double kappa_s = 5.0;
  double kappa_d = 500.0;
  double dt_max = 10.0;
  std::vector<ThresholdRule> threshold_table = default_threshold_table();
  RiskType default_risk_type = risk::content_moderation;
};

inline void validate_mapping(const MappingConfig& cfg) {
  if (!(cfg.kappa_s > 0.0)) throw ValidationError("kappa_s", "must be > 0");
  if (!(cfg.kappa_d > 0.0)) throw ValidationError("kappa_d", "must be > 0");
  if (!(cfg.dt_max >= 1.0)) throw ValidationError("dt_max", "must be >= 1");
  for (const auto& rule : cfg.threshold_table)
    for (const auto& c : rule.any_of)
      if (!(c.threshold > 0.0 && c.threshold <= 1.0))
        throw ValidationError("threshold_table", "threshold for '" + c.category + "' outside (0, 1]");
}

/// First rule in table order with a matching condition wins.
inline RiskType classify_risk(const std::map<std::string, double>& scores,
                              const std::vector<ThresholdRule>& table,
                              const RiskType& fallback = risk::content_moderation) {
  for (const auto& rule : table)
    for (const auto& c : rule.any_of) {
      auto it = scores.find(c.category);
      if (it != scores.end() && it->second > c.threshold) return rule.risk_type;
    }
  return fallback;
}

/// Maps an annotated record to a community report:
///   cost = max(1, kappa_s * sum of scores)
///   accessibility = min(1, turns / dt_max)
///   damage = kappa_d * max score
inline Report map_record(const ReplayRecord& rec, const MappingConfig& cfg, ReportId id = 0,
                         int month = 0) {
  double sum = 0.0, peak = 0.0;
  for (const auto& [cat, v] : rec.scores) {
    sum += v;
    peak = std::max(peak, v);
  }
  const double cost = std::max(1.0, cfg.kappa_s * sum);
  const double accessibility = std::min(1.0, rec.dialogue_turns / cfg.dt_max);
  const double damage = cfg.kappa_d * peak;
  return make_report(id, month, cost, accessibility, damage, Source::community,
                     classify_risk(rec.scores, cfg.threshold_table, cfg.default_risk_type));
}

/// Monthly arrival batches by UTC calendar month, starting at the earliest
/// timestamped month. Records without a timestamp go to month 0. Report ids
/// are input positions.
inline std::vector<std::vector<Report>> bucket_by_month(std::span<const ReplayRecord> records,
                                                        const MappingConfig& cfg) {
  validate_mapping(cfg);
  std::optional<long long> first;
  for (const auto& r : records)
    if (r.timestamp) {
      const auto m = calendar_month_index(*r.timestamp);
      first = first ? std::min(*first, m) : m;
    }
  std::vector<std::vector<Report>> batches;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const long long month = rec.timestamp ? calendar_month_index(*rec.timestamp) - *first : 0;
    if (static_cast<std::size_t>(month) >= batches.size()) batches.resize(static_cast<std::size_t>(month) + 1);
    batches[static_cast<std::size_t>(month)].push_back(map_record(rec, cfg, i, static_cast<int>(month)));
  }
  return batches;
}

/// Replays a corpus through the engine: observation window from `config`,
/// then drains until the backlog is empty.
inline SimulationResult replay(std::span<const ReplayRecord> records, Policy policy,
                               SimulationConfig config, const MappingConfig& mapping = {}) {
  if (records.empty()) throw ValidationError("records", "replay needs at least one record");
  auto batches = bucket_by_month(records, mapping);
  config.policy = policy;
  config.drain = true;
  config.feedback.reset();
  config.duration_months = std::max(static_cast<int>(batches.size()), config.observation_months + 1);
  return Simulator(config, std::move(batches)).run();
}

}  // namespace supervisim
