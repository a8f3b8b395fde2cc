#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "supervisim/engine.hpp"
#include "supervisim/forecast.hpp"
#include "supervisim/ingest.hpp"
#include "supervisim/io.hpp"

namespace supervisim::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string policy;
  bool drain = false;
  bool feedback = false;
  std::string stamp;
};

namespace detail {

inline void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--config", o.config_path, "JSON configuration file");
  cmd.add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd.add_option("--out", o.out_dir, "output directory (default: $SUPERVISIM_OUT or .)");
  cmd.add_option("--stamp", o.stamp, "timestamp used in file names, YYYYMMDD_HHMMSS");
}

inline std::filesystem::path output_dir(const CommonOptions& o) {
  std::filesystem::path dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("SUPERVISIM_OUT");
    dir = env != nullptr && *env != '\0' ? env : ".";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

inline SimulationConfig resolve_config(const CommonOptions& o) {
  SimulationConfig c = o.config_path.empty() ? SimulationConfig{} : load_config(o.config_path);
  if (o.seed) c.master_seed = *o.seed;
  if (!o.policy.empty() && o.policy != "all") c.policy = parse_policy(o.policy);
  if (o.drain) c.drain = true;
  if (o.feedback && !c.feedback) c.feedback = FeedbackConfig{};
  return validate_config(c);
}

inline std::vector<Policy> resolve_policies(const CommonOptions& o, const SimulationConfig& c) {
  if (o.policy == "all") return {kAllPolicies.begin(), kAllPolicies.end()};
  return {c.policy};
}

inline std::string stamp_of(const CommonOptions& o) {
  if (o.stamp.empty()) return current_stamp();
  if (o.stamp.find_first_of("/\\") != std::string::npos) throw ValidationError("stamp", "must not contain path separators");
  return o.stamp;
}

inline RunManifest make_manifest(const std::string& command, const CommonOptions& o,
                                 const SimulationConfig& c) {
  RunManifest m;
  m.command = command;
  m.config_path = o.config_path;
  m.seed = c.master_seed;
  m.output_dir = output_dir(o);
  return m;
}

/// Report CSV, monthly metrics CSV and JSON summary for one run.
inline void emit_run(RunManifest& manifest, const SimulationResult& result, const std::string& stamp) {
  const std::string tag(file_tag(result.config.policy));
  const std::string suffix = run_label(result.run_index) + "_" + stamp;
  manifest.emit(tag + "_simulation." + suffix + ".csv", reports_to_csv(result.all_reports()));
  manifest.emit(tag + "_metrics." + suffix + ".csv", metrics_to_csv(result));
  manifest.emit(tag + "_summary." + suffix + ".json", run_summary_json(result).dump(2) + "\n");
}

inline void finish(RunManifest& manifest, std::ostream& out) {
  write_file(manifest.output_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  for (const auto& f : manifest.files) out << (manifest.output_dir / f.name).string() << '\n';
}

}  // namespace detail

/// Writes the per-run files for one simulation; returns the emitted names.
inline std::vector<std::string> emit_csv(const SimulationResult& result, const std::filesystem::path& dir,
                                         const std::string& stamp) {
  RunManifest m;
  m.output_dir = dir;
  detail::emit_run(m, result, stamp);
  std::vector<std::string> names;
  for (const auto& f : m.files) names.push_back(f.name);
  return names;
}

/// Entry point shared by the executable and the tests.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Monte-Carlo simulator of budget-constrained risk-report supervision", "supervisim"};
  app.require_subcommand(1);

  CommonOptions sim_opts, batch_opts, replay_opts;
  std::size_t runs = 100;
  unsigned jobs = 1;

  auto* simulate = app.add_subcommand("simulate", "single simulation run");
  detail::add_common(*simulate, sim_opts);
  simulate->add_option("--policy", sim_opts.policy, "non_prioritised | random | priority | diversity");
  simulate->add_flag("--drain", sim_opts.drain, "continue until the backlog is empty");
  simulate->add_flag("--feedback", sim_opts.feedback, "enable incentive/occurrence feedback");

  auto* batch = app.add_subcommand("batch", "n independent runs per policy");
  detail::add_common(*batch, batch_opts);
  batch->add_option("--policy", batch_opts.policy, "policy name or 'all'");
  batch->add_option("--runs", runs, "runs per policy")->check(CLI::PositiveNumber);
  batch->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  batch->add_flag("--drain", batch_opts.drain, "continue until the backlog is empty");
  batch->add_flag("--feedback", batch_opts.feedback, "enable incentive/occurrence feedback");

  std::string input, schema_path, format = "auto";
  MappingConfig mapping;
  auto* replay_cmd = app.add_subcommand("replay", "replay an annotated corpus");
  detail::add_common(*replay_cmd, replay_opts);
  replay_cmd->add_option("--policy", replay_opts.policy, "policy name or 'all'");
  replay_cmd->add_option("--input", input, "CSV or JSON-lines corpus")->required();
  replay_cmd->add_option("--schema", schema_path, "JSON file overriding column names");
  replay_cmd->add_option("--format", format, "auto | csv | jsonl")->check(CLI::IsMember({"auto", "csv", "jsonl"}));
  replay_cmd->add_option("--kappa-s", mapping.kappa_s, "cost scale");
  replay_cmd->add_option("--kappa-d", mapping.kappa_d, "damage scale");
  replay_cmd->add_option("--dt-max", mapping.dt_max, "dialogue-turn cap for accessibility");
  bool replay_drain_flag = false;
  replay_cmd->add_flag("--drain", replay_drain_flag, "accepted for symmetry; replay always drains");

  std::string series_path, forecast_out, forecast_stamp;
  double alpha = 0.5, beta = 0.3;
  int horizon = 12;
  ScenarioMultipliers mult;
  auto* forecast = app.add_subcommand("forecast", "Holt scenario projection of a monthly series");
  forecast->add_option("--input", series_path, "month,count CSV")->required();
  forecast->add_option("--horizon", horizon, "months to project")->check(CLI::PositiveNumber);
  forecast->add_option("--alpha", alpha, "level smoothing in (0, 1]");
  forecast->add_option("--beta", beta, "trend smoothing in [0, 1]");
  forecast->add_option("--worst", mult.worst, "trend multiplier, worst case");
  forecast->add_option("--average", mult.average, "trend multiplier, average case");
  forecast->add_option("--best", mult.best, "trend multiplier, best case");
  forecast->add_option("--out", forecast_out, "output directory");
  forecast->add_option("--stamp", forecast_stamp, "timestamp used in file names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  try {
    if (simulate->parsed()) {
      const auto config = detail::resolve_config(sim_opts);
      const auto stamp = detail::stamp_of(sim_opts);
      auto manifest = detail::make_manifest("simulate", sim_opts, config);
      const auto result = run_simulation(config, 0);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      detail::emit_run(manifest, result, stamp);
      detail::finish(manifest, out);
    } else if (batch->parsed()) {
      const auto base = detail::resolve_config(batch_opts);
      const auto stamp = detail::stamp_of(batch_opts);
      auto manifest = detail::make_manifest("batch", batch_opts, base);
      ordered_json summary;
      summary["runs"] = runs;
      summary["seed"] = base.master_seed;
      summary["policies"] = ordered_json::object();
      for (Policy p : detail::resolve_policies(batch_opts, base)) {
        SimulationConfig c = base;
        c.policy = p;
        const auto batch_result = run_batch(c, runs, std::nullopt, jobs);
        for (const auto& r : batch_result.runs) {
          for (const auto& w : r.warnings) err << "warning: run " << r.run_index << ": " << w << '\n';
          manifest.emit(std::string(file_tag(p)) + "_simulation." + run_label(r.run_index) + "_" + stamp + ".csv",
                        reports_to_csv(r.all_reports()));
        }
        summary["policies"][std::string(to_string(p))] = batch_summary_json(batch_result.summary);
      }
      summary["config"] = config_to_json(base);
      manifest.emit("batch_summary_" + stamp + ".json", summary.dump(2) + "\n");
      detail::finish(manifest, out);
    } else if (replay_cmd->parsed()) {
      const auto base = detail::resolve_config(replay_opts);
      const auto stamp = detail::stamp_of(replay_opts);
      validate_mapping(mapping);
      RecordSchema schema;
      if (!schema_path.empty()) {
        try {
          schema = RecordSchema::from_json(nlohmann::json::parse(read_file(schema_path)));
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError("schema", e.what());
        }
      }
      std::ifstream in(input, std::ios::binary);
      if (!in) throw IoError("cannot open '" + input + "' for reading");
      const InputFormat fmt = format == "csv" ? InputFormat::csv
                              : format == "jsonl" ? InputFormat::jsonl
                                                  : InputFormat::automatic;
      const auto records = parse_records(in, schema, fmt);
      auto manifest = detail::make_manifest("replay", replay_opts, base);
      for (Policy p : detail::resolve_policies(replay_opts, base)) {
        const auto result = replay(records, p, base, mapping);
        for (const auto& w : result.warnings) err << "warning: " << w << '\n';
        detail::emit_run(manifest, result, stamp);
      }
      detail::finish(manifest, out);
    } else if (forecast->parsed()) {
      const auto series = series_from_csv(read_file(series_path));
      const auto model = fit_holt(series, alpha, beta);
      const auto projection = project_scenarios(model, horizon, mult);
      CommonOptions fo;
      fo.out_dir = forecast_out;
      fo.stamp = forecast_stamp;
      RunManifest manifest;
      manifest.command = "forecast";
      manifest.output_dir = detail::output_dir(fo);
      manifest.emit("forecast_" + detail::stamp_of(fo) + ".csv", scenarios_to_csv(projection));
      detail::finish(manifest, out);
    }
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const CalibrationError& e) {
    err << "calibration failed: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

}  // namespace supervisim::cli
