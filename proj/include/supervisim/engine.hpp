#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "supervisim/core.hpp"
#include "supervisim/feedback.hpp"
#include "supervisim/genesis.hpp"
#include "supervisim/policies.hpp"
#include "supervisim/rng.hpp"

namespace supervisim {

/// Capacity cannot be derived from the observation window.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monthly budget: C_0 times the mean monthly total supervision cost observed.
inline double calibrate_capacity(std::span<const std::vector<Report>> observation_months,
                                 double capacity_fraction) {
  if (observation_months.empty()) throw CalibrationError("no observation months");
  if (!(capacity_fraction > 0.0)) throw ValidationError("capacity_fraction", "must be > 0");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& month : observation_months) {
    for (const auto& r : month) total += r.supervision_cost;
    count += month.size();
  }
  if (count == 0) throw CalibrationError("no reports observed; capacity would be zero");
  return capacity_fraction * total / static_cast<double>(observation_months.size());
}

struct SimulationState {
  int month = 0;  // next month to simulate
  std::vector<Report> backlog;
  std::vector<Report> processed;  // in processing order
  std::optional<double> capacity;
  std::optional<FeedbackState> feedback;
  std::vector<std::vector<Report>> observation_batches;
  ReportId next_id = 0;
  std::size_t generated = 0;
};

struct SimulationResult {
  SimulationConfig config;
  std::uint64_t run_index = 0;
  std::vector<MonthlyMetrics> metrics;
  std::vector<Report> processed;  // in processing order
  std::vector<Report> backlog;    // unprocessed at the end of the run
  double capacity = 0.0;
  std::vector<std::string> warnings;

  std::uint64_t seed() const noexcept { return config.master_seed; }

  /// Every report of the run, processed ones first in processing order.
  std::vector<Report> all_reports() const {
    std::vector<Report> out = processed;
    out.insert(out.end(), backlog.begin(), backlog.end());
    return out;
  }
};

/// One simulation run as an explicit monthly state machine.
///
/// Arrivals come either from the source profiles (generative runs) or from
/// pre-bucketed monthly batches (replay). Observation months only accumulate;
/// capacity is calibrated at the end of the last observation month, and
/// observation-month reports stay in the pool for later processing.
class Simulator {
 public:
  Simulator(const SimulationConfig& config, std::uint64_t run_index)
      : config_(validate_config(config)),
        run_index_(run_index),
        sources_(config_.master_seed, run_index),
        policy_rng_(config_.master_seed, run_index, "policy") {
    init_feedback();
  }

  /// Replay constructor: `batches[m]` are the arrivals of month m. Report ids
  /// must be unique; arrival months are overwritten with the batch index.
  Simulator(const SimulationConfig& config, std::vector<std::vector<Report>> batches)
      : config_(validate_config(config)),
        run_index_(0),
        sources_(config_.master_seed, 0),
        policy_rng_(config_.master_seed, 0, "policy"),
        prerecorded_(std::move(batches)) {
    for (std::size_t m = 0; m < prerecorded_->size(); ++m)
      for (auto& r : (*prerecorded_)[m]) {
        r.arrival_month = static_cast<int>(m);
        r.processed_month.reset();
      }
    init_feedback();
  }

  const SimulationState& state() const noexcept { return state_; }
  const SimulationConfig& config() const noexcept { return config_; }

  bool in_observation() const noexcept { return state_.month < config_.observation_months; }

  /// Advances one month and returns its metrics.
  MonthlyMetrics step_month() {
    const int m = state_.month;
    MonthlyMetrics mm;
    mm.month = m;

    std::vector<Report> arrivals = draw_arrivals(m);
    mm.arrivals = static_cast<int>(arrivals.size());
    for (const auto& r : arrivals) ++mm.arrivals_by_source[index_of(r.source)];
    state_.generated += arrivals.size();

    if (m < config_.observation_months) state_.observation_batches.push_back(arrivals);
    state_.backlog.insert(state_.backlog.end(), arrivals.begin(), arrivals.end());

    if (m < config_.observation_months) {
      if (m + 1 == config_.observation_months)
        state_.capacity = calibrate_capacity(state_.observation_batches, config_.capacity_fraction);
    } else {
      process(m, mm);
    }
    mm.backlog = static_cast<int>(state_.backlog.size());

    if (state_.feedback && m >= config_.observation_months) {
      update_feedback(*state_.feedback, mm, *config_.feedback);
    }
    if (state_.feedback) mm.feedback = state_.feedback->snapshot();

    ++state_.month;
    return mm;
  }

  /// Runs the configured horizon, then drains if requested.
  SimulationResult run() {
    SimulationResult result;
    while (state_.month < config_.duration_months) result.metrics.push_back(step_month());
    if (config_.drain) {
      const int cap = config_.duration_months * 10;
      int extra = 0;
      while (!state_.backlog.empty() && extra < cap) {
        result.metrics.push_back(step_month());
        ++extra;
      }
      if (!state_.backlog.empty())
        result.warnings.push_back("drain stopped after " + std::to_string(cap) +
                                  " extra months with " + std::to_string(state_.backlog.size()) +
                                  " reports pending");
    }
    result.config = config_;
    result.run_index = run_index_;
    result.processed = state_.processed;
    result.backlog = state_.backlog;
    std::sort(result.backlog.begin(), result.backlog.end(), CandidatePool::arrival_order);
    result.capacity = state_.capacity.value_or(0.0);
    return result;
  }

 private:
  void init_feedback() {
    if (config_.feedback) state_.feedback = initial_feedback_state(*config_.feedback, config_.profiles);
  }

  std::vector<Report> draw_arrivals(int m) {
    if (prerecorded_) {
      if (static_cast<std::size_t>(m) < prerecorded_->size()) return (*prerecorded_)[m];
      return {};
    }
    if (m >= config_.duration_months) return {};
    if (state_.feedback) {
      const auto profiles = effective_generation_params(config_.profiles, *state_.feedback, *config_.feedback);
      return sample_month(profiles, m, state_.next_id, sources_);
    }
    return sample_month(config_.profiles, m, state_.next_id, sources_);
  }

  void process(int m, MonthlyMetrics& mm) {
    const double capacity = *state_.capacity;
    mm.capacity = capacity;
    CandidatePool pool(std::move(state_.backlog));
    state_.backlog.clear();
    const Selection sel = select(config_.policy, pool, capacity, policy_rng_, config_.fifo_skip_mode);

    std::unordered_set<ReportId> chosen(sel.ids.begin(), sel.ids.end());
    std::map<ReportId, const Report*> by_id;
    for (const auto& r : pool.reports()) {
      if (chosen.count(r.id))
        by_id[r.id] = &r;
      else
        state_.backlog.push_back(r);
    }

    double sum_cost = 0, sum_acc = 0, sum_dmg = 0, sum_pri = 0;
    for (ReportId id : sel.ids) {
      Report r = *by_id.at(id);
      r.processed_month = m;
      sum_cost += r.supervision_cost;
      sum_acc += r.accessibility;
      sum_dmg += r.potential_damage;
      sum_pri += r.priority;
      ++mm.processed_by_source[index_of(r.source)];
      ++mm.processed_by_risk_type[r.risk_type];
      if (static_cast<int>(mm.first_processed.size()) < config_.first_processed_log)
        mm.first_processed.push_back(r.id);
      state_.processed.push_back(std::move(r));
    }
    mm.processed = static_cast<int>(sel.size());
    mm.capacity_used = sel.total_cost;
    mm.damage_mitigated = sum_dmg;
    if (mm.processed > 0) {
      const double n = mm.processed;
      mm.mean_cost = sum_cost / n;
      mm.mean_accessibility = sum_acc / n;
      mm.mean_damage = sum_dmg / n;
      mm.mean_priority = sum_pri / n;
    }
  }

  SimulationConfig config_;
  std::uint64_t run_index_;
  SourceStreams sources_;
  RngStream policy_rng_;
  std::optional<std::vector<std::vector<Report>>> prerecorded_;
  SimulationState state_;
};

inline SimulationResult run_simulation(const SimulationConfig& config, std::uint64_t run_index = 0) {
  return Simulator(config, run_index).run();
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

/// Statistics pooled over every processed report of every run.
struct BatchSummary {
  Policy policy = Policy::non_prioritised;
  std::size_t n_runs = 0;
  std::size_t processed = 0;
  std::size_t generated = 0;
  double mean_cost = 0.0;
  double mean_accessibility = 0.0;
  double mean_damage = 0.0;
  double mean_priority = 0.0;
  std::array<double, kSourceCount> source_share{};
  std::map<RiskType, double> risk_type_share;
  /// Batch mean of B_t per simulated month (runs shorter than the longest
  /// run contribute their final backlog).
  std::vector<double> mean_backlog;
  double mean_capacity = 0.0;
};

struct BatchResult {
  std::vector<SimulationResult> runs;  // ordered by run index
  BatchSummary summary;
};

inline BatchSummary summarize(std::span<const SimulationResult> runs) {
  BatchSummary s;
  s.n_runs = runs.size();
  if (runs.empty()) return s;
  s.policy = runs.front().config.policy;
  std::array<std::size_t, kSourceCount> by_source{};
  std::map<RiskType, std::size_t> by_type;
  std::size_t months = 0;
  for (const auto& run : runs) months = std::max(months, run.metrics.size());
  s.mean_backlog.assign(months, 0.0);

  for (const auto& run : runs) {
    s.generated += run.processed.size() + run.backlog.size();
    for (const auto& r : run.processed) {
      s.mean_cost += r.supervision_cost;
      s.mean_accessibility += r.accessibility;
      s.mean_damage += r.potential_damage;
      s.mean_priority += r.priority;
      ++by_source[index_of(r.source)];
      ++by_type[r.risk_type];
    }
    s.processed += run.processed.size();
    for (std::size_t t = 0; t < months; ++t) {
      const auto& mm = t < run.metrics.size() ? run.metrics[t] : run.metrics.back();
      s.mean_backlog[t] += mm.backlog;
    }
    s.mean_capacity += run.capacity;
  }
  const double runs_d = static_cast<double>(runs.size());
  for (auto& b : s.mean_backlog) b /= runs_d;
  s.mean_capacity /= runs_d;
  if (s.processed > 0) {
    const double n = static_cast<double>(s.processed);
    s.mean_cost /= n;
    s.mean_accessibility /= n;
    s.mean_damage /= n;
    s.mean_priority /= n;
    for (std::size_t i = 0; i < kSourceCount; ++i) s.source_share[i] = by_source[i] / n;
    for (const auto& [rt, c] : by_type) s.risk_type_share[rt] = c / n;
  }
  return s;
}

/// Runs `n_runs` independent simulations (run indices 0..n_runs-1) on up to
/// `jobs` threads. Output order is by run index regardless of completion order.
inline BatchResult run_batch(SimulationConfig config, std::size_t n_runs,
                             std::optional<std::uint64_t> master_seed = std::nullopt,
                             unsigned jobs = 1) {
  if (n_runs == 0) throw ValidationError("runs", "must be >= 1");
  if (master_seed) config.master_seed = *master_seed;
  config = validate_config(config);

  BatchResult out;
  out.runs.resize(n_runs);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_runs);
  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      try {
        out.runs[i] = run_simulation(config, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n_runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  out.summary = summarize(out.runs);
  return out;
}

}  // namespace supervisim
