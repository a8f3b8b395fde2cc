#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "supervisim/core.hpp"
#include "supervisim/rng.hpp"

namespace supervisim {

// Variate generators. Each draw constructs its distribution afresh so that a
// stream's output depends only on how many draws preceded it, never on
// hidden cached state inside a distribution object.

inline int sample_poisson(double mean, RngStream& rng) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

inline double sample_lognormal(double mu, double sigma, RngStream& rng) {
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  return std::exp(mu + sigma * z);
}

inline double sample_beta(double alpha, double beta, RngStream& rng) {
  const double x = std::gamma_distribution<double>(alpha, 1.0)(rng);
  const double y = std::gamma_distribution<double>(beta, 1.0)(rng);
  if (x + y == 0.0) return alpha >= beta ? 1.0 : 0.0;  // both underflowed
  return x / (x + y);
}

/// Pareto type I by inverse CDF: scale * U^(-1/shape), U in (0, 1].
/// U = 1 maps to exactly `scale`.
inline double sample_pareto(double shape, double scale, RngStream& rng) {
  const double u = rng.uniform_open_zero();
  return scale * std::pow(u, -1.0 / shape);
}

inline double sample_damage(const SourceProfile& p, RngStream& rng) {
  const double x = sample_pareto(p.dmg_shape, p.dmg_scale, rng);
  return p.damage_model == DamageModel::lomax ? x - p.dmg_scale : x;
}

/// Number of reports a source files in one month.
inline int sample_monthly_arrivals(const SourceProfile& profile, RngStream& rng) {
  return sample_poisson(profile.lambda, rng);
}

/// Categorical draw from an ordered prior. Zero-mass entries are never drawn.
inline RiskType assign_risk_type(const RiskPrior& prior, RngStream& rng) {
  const RiskPrior valid = validate_prior(prior, "risk_prior");
  const double u = rng.uniform();
  double cumulative = 0.0;
  const RiskType* last_positive = nullptr;
  for (const auto& [rt, w] : valid) {
    if (w <= 0.0) continue;
    cumulative += w;
    last_positive = &rt;
    if (u < cumulative) return rt;
  }
  return *last_positive;  // rounding left u above the final partial sum
}

inline Report sample_report(const SourceProfile& profile, int month, ReportId id,
                            RngStream& rng) {
  if (month < 0) throw ValidationError("month", "must be >= 0");
  const double cost = sample_lognormal(profile.cost_mu, profile.cost_sigma, rng);
  const double accessibility = sample_beta(profile.acc_alpha, profile.acc_beta, rng);
  const double damage = sample_damage(profile, rng);
  RiskType rt = assign_risk_type(profile.risk_prior, rng);
  return make_report(id, month, cost, accessibility, damage, profile.source, std::move(rt));
}

/// One month's arrivals from one source. Ids are taken from `next_id`, which
/// is advanced past the last id used.
inline std::vector<Report> sample_source_batch(const SourceProfile& profile, int month,
                                               ReportId& next_id, RngStream& rng) {
  const int n = sample_monthly_arrivals(profile, rng);
  std::vector<Report> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample_report(profile, month, next_id++, rng));
  return out;
}

/// Per-source streams for one run.
struct SourceStreams {
  std::array<RngStream, kSourceCount> streams;

  SourceStreams(std::uint64_t master_seed, std::uint64_t run_index)
      : streams{RngStream(master_seed, run_index, to_string(Source::community)),
                RngStream(master_seed, run_index, to_string(Source::crowdsourced)),
                RngStream(master_seed, run_index, to_string(Source::expert))} {}

  RngStream& operator[](Source s) { return streams[index_of(s)]; }
};

/// All arrivals for one month, sources concatenated in declaration order.
inline std::vector<Report> sample_month(const ProfileSet& profiles, int month, ReportId& next_id,
                                        SourceStreams& streams) {
  std::vector<Report> batch;
  for (Source s : kAllSources) {
    auto part = sample_source_batch(profiles[index_of(s)], month, next_id, streams[s]);
    batch.insert(batch.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  return batch;
}

}  // namespace supervisim
