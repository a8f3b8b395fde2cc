#pragma once

#include <algorithm>
#include <map>
#include <set>

#include "supervisim/core.hpp"

namespace supervisim {

/// Incentive level per source and occurrence rate per risk type.
struct FeedbackState {
  std::array<double, kSourceCount> incentive{1.0, 1.0, 1.0};
  std::map<RiskType, double> occurrence;

  FeedbackSnapshot snapshot() const { return {incentive, occurrence}; }
};

/// Every risk type that any profile can emit, in label order.
inline std::set<RiskType> risk_types_of(const ProfileSet& profiles) {
  std::set<RiskType> out;
  for (const auto& p : profiles)
    for (const auto& [rt, w] : p.risk_prior) out.insert(rt);
  return out;
}

inline FeedbackState initial_feedback_state(const FeedbackConfig& cfg, const ProfileSet& profiles) {
  FeedbackState st;
  st.incentive = cfg.initial_incentive;
  for (const auto& rt : risk_types_of(profiles)) st.occurrence[rt] = cfg.initial_occurrence_for(rt);
  return st;
}

/// Fraction of this month's arrivals from `source` that were processed this
/// month, clipped to [0, 1]. With no arrivals the rate is beta_I, which
/// leaves the incentive unchanged.
inline double processing_rate(Source source, const MonthlyMetrics& month, const FeedbackConfig& cfg) {
  const int arrived = month.arrivals_by_source[index_of(source)];
  if (arrived <= 0) return cfg.beta_I;
  const double rate = static_cast<double>(month.processed_by_source[index_of(source)]) / arrived;
  return std::clamp(rate, 0.0, 1.0);
}

inline double update_incentive(double incentive, double rate, const FeedbackConfig& cfg) {
  const double next = incentive + cfg.gamma_I * (rate - cfg.beta_I) * incentive;
  return std::clamp(next, cfg.I_min, cfg.I_max);
}

/// Mitigation then recovery:
///   O' = max(O_min, O - gamma_O * M),  O'' = min(O_max, O' + delta_O).
inline double update_occurrence(double occurrence, int processed_count, const FeedbackConfig& cfg) {
  if (processed_count < 0) throw ValidationError("processed_count", "must be >= 0");
  const double mitigated = std::max(cfg.O_min, occurrence - cfg.gamma_O * processed_count);
  if (cfg.recover_only_when_unmitigated && processed_count > 0) return mitigated;
  return std::min(cfg.O_max, mitigated + cfg.delta_O);
}

/// Advances the state by one month of processing outcomes.
inline void update_feedback(FeedbackState& state, const MonthlyMetrics& month,
                            const FeedbackConfig& cfg) {
  for (Source s : kAllSources) {
    auto& inc = state.incentive[index_of(s)];
    inc = update_incentive(inc, processing_rate(s, month, cfg), cfg);
  }
  for (auto& [rt, o] : state.occurrence) {
    auto it = month.processed_by_risk_type.find(rt);
    o = update_occurrence(o, it == month.processed_by_risk_type.end() ? 0 : it->second, cfg);
  }
}

/// Arrival rates scaled by incentive; risk priors reweighted by occurrence
/// relative to its initial value and renormalised.
inline ProfileSet effective_generation_params(const ProfileSet& base, const FeedbackState& state,
                                              const FeedbackConfig& cfg) {
  ProfileSet out = base;
  for (Source s : kAllSources) {
    auto& p = out[index_of(s)];
    p.lambda = base[index_of(s)].lambda * state.incentive[index_of(s)];
    double sum = 0.0;
    for (auto& [rt, w] : p.risk_prior) {
      auto it = state.occurrence.find(rt);
      if (it != state.occurrence.end()) w *= it->second / cfg.initial_occurrence_for(rt);
      sum += w;
    }
    if (sum > 0.0)
      for (auto& entry : p.risk_prior) entry.second /= sum;
    else
      p.risk_prior = base[index_of(s)].risk_prior;
  }
  return out;
}

}  // namespace supervisim
