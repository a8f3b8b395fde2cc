#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace supervisim {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Raised when an input value or configuration field violates its contract.
/// `field()` names the offending field so callers can report it verbatim.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raised on file-system or stream failures (unreadable input, unwritable output).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Sources and risk types
// ---------------------------------------------------------------------------

enum class Source : std::uint8_t { community = 0, crowdsourced = 1, expert = 2 };

inline constexpr std::size_t kSourceCount = 3;
inline constexpr std::array<Source, kSourceCount> kAllSources{
    Source::community, Source::crowdsourced, Source::expert};

constexpr std::size_t index_of(Source s) noexcept { return static_cast<std::size_t>(s); }

constexpr std::string_view to_string(Source s) noexcept {
  switch (s) {
    case Source::community: return "community";
    case Source::crowdsourced: return "crowdsourced";
    case Source::expert: return "expert";
  }
  return "community";
}

inline Source parse_source(std::string_view name) {
  for (Source s : kAllSources)
    if (to_string(s) == name) return s;
  throw ValidationError("source", "unknown source '" + std::string(name) + "'");
}

/// Risk types form an open namespace: the generative taxonomy and the replay
/// categories share one label space, so they are plain strings.
using RiskType = std::string;

namespace risk {
inline const RiskType privacy = "Privacy";
inline const RiskType misinformation = "Misinformation";
inline const RiskType bias = "Bias";
inline const RiskType user_experience = "User experience";
inline const RiskType content_moderation = "Content moderation";
inline const RiskType security = "Security";
inline const RiskType ethical = "Ethical";
inline const RiskType robustness = "Robustness";
inline const RiskType long_term_societal = "Long-term societal impact";
inline const RiskType ai_alignment = "AI alignment";
inline const RiskType interpretability = "Interpretability";
// replay-only categories
inline const RiskType compliance_legal = "Compliance and Legal";
inline const RiskType bias_fairness = "Bias and Fairness";
}  // namespace risk

/// Ordered categorical distribution over risk types. Order is significant:
/// it fixes the mapping from uniform draws to labels.
using RiskPrior = std::vector<std::pair<RiskType, double>>;

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

enum class Policy : std::uint8_t { non_prioritised, random, priority, diversity };

inline constexpr std::array<Policy, 4> kAllPolicies{
    Policy::non_prioritised, Policy::random, Policy::priority, Policy::diversity};

constexpr std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::non_prioritised: return "non_prioritised";
    case Policy::random: return "random";
    case Policy::priority: return "priority";
    case Policy::diversity: return "diversity";
  }
  return "non_prioritised";
}

/// File-name tag used for emitted per-run report files.
constexpr std::string_view file_tag(Policy p) noexcept {
  switch (p) {
    case Policy::non_prioritised: return "non-prioritized";
    case Policy::random: return "random_fairness";
    case Policy::priority: return "prioritized";
    case Policy::diversity: return "diversity_prioritized";
  }
  return "non-prioritized";
}

inline Policy parse_policy(std::string_view name) {
  if (name == "non_prioritised" || name == "non-prioritized" || name == "fifo" || name == "np")
    return Policy::non_prioritised;
  if (name == "random" || name == "random_fairness" || name == "rd") return Policy::random;
  if (name == "priority" || name == "prioritized" || name == "pb") return Policy::priority;
  if (name == "diversity" || name == "diversity_prioritized" || name == "dp")
    return Policy::diversity;
  throw ValidationError("policy", "unknown policy '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

using ReportId = std::uint64_t;

struct Report {
  ReportId id = 0;
  int arrival_month = 0;
  double supervision_cost = 1.0;
  double accessibility = 0.0;
  double potential_damage = 0.0;
  double priority = 0.0;
  Source source = Source::community;
  RiskType risk_type;
  std::optional<int> processed_month;

  bool processed() const noexcept { return processed_month.has_value(); }
};

/// Priority score ln(1 + accessibility * damage).
inline double priority_score(double accessibility, double damage) {
  if (!(accessibility >= 0.0 && accessibility <= 1.0))
    throw ValidationError("accessibility", "must lie in [0, 1]");
  if (!(damage >= 0.0) || !std::isfinite(damage))
    throw ValidationError("potential_damage", "must be finite and non-negative");
  return std::log1p(accessibility * damage);
}

/// Checks every Report invariant; throws ValidationError naming the first
/// violated field.
inline void check_report(const Report& r) {
  if (!(r.accessibility >= 0.0 && r.accessibility <= 1.0))
    throw ValidationError("accessibility", "must lie in [0, 1]");
  if (!(r.supervision_cost > 0.0) || !std::isfinite(r.supervision_cost))
    throw ValidationError("supervision_cost", "must be finite and positive");
  if (!(r.potential_damage >= 0.0))
    throw ValidationError("potential_damage", "must be non-negative");
  if (r.arrival_month < 0) throw ValidationError("arrival_month", "must be >= 0");
  const double expected = std::log1p(r.accessibility * r.potential_damage);
  if (std::abs(r.priority - expected) > 1e-12 * std::max(1.0, std::abs(expected)))
    throw ValidationError("priority", "inconsistent with accessibility and damage");
  if (r.processed_month && *r.processed_month < r.arrival_month)
    throw ValidationError("processed_month", "precedes arrival_month");
}

/// Builds a report with its priority derived from accessibility and damage.
inline Report make_report(ReportId id, int month, double cost, double accessibility, double damage,
                          Source source, RiskType risk_type) {
  Report r;
  r.id = id;
  r.arrival_month = month;
  r.supervision_cost = cost;
  r.accessibility = accessibility;
  r.potential_damage = damage;
  r.priority = priority_score(accessibility, damage);
  r.source = source;
  r.risk_type = std::move(risk_type);
  check_report(r);
  return r;
}

// ---------------------------------------------------------------------------
// Source profiles
// ---------------------------------------------------------------------------

/// How potential damage is drawn from the (shape, scale) pair.
///  - pareto_type1: x = scale * U^(-1/shape), support [scale, inf).
///  - lomax: the excess over the scale, x = scale * (U^(-1/shape) - 1),
///    support [0, inf). This is the variant the published policy means were
///    produced with.
enum class DamageModel : std::uint8_t { lomax, pareto_type1 };

constexpr std::string_view to_string(DamageModel m) noexcept {
  return m == DamageModel::lomax ? "lomax" : "pareto_type1";
}

inline DamageModel parse_damage_model(std::string_view name) {
  if (name == "lomax") return DamageModel::lomax;
  if (name == "pareto_type1" || name == "pareto") return DamageModel::pareto_type1;
  throw ValidationError("damage_model", "unknown damage model '" + std::string(name) + "'");
}

struct SourceProfile {
  Source source = Source::community;
  double lambda = 0.0;
  double cost_mu = 0.0;
  double cost_sigma = 0.0;
  double acc_alpha = 1.0;
  double acc_beta = 1.0;
  double dmg_shape = 1.0;
  double dmg_scale = 1.0;
  DamageModel damage_model = DamageModel::lomax;
  RiskPrior risk_prior;
};

using ProfileSet = std::array<SourceProfile, kSourceCount>;

/// Named parameter sets. They differ only in the damage scales of the
/// crowdsourced and expert sources (200/500 vs 150/250).
enum class Preset : std::uint8_t { main_text, supplementary };

inline Preset parse_preset(std::string_view name) {
  if (name == "main_text") return Preset::main_text;
  if (name == "supplementary") return Preset::supplementary;
  throw ValidationError("preset", "unknown preset '" + std::string(name) + "'");
}

constexpr std::string_view to_string(Preset p) noexcept {
  return p == Preset::main_text ? "main_text" : "supplementary";
}

inline RiskPrior default_risk_prior(Source s) {
  using namespace risk;
  switch (s) {
    case Source::community:
      return {{privacy, 0.30}, {misinformation, 0.25}, {bias, 0.20},
              {user_experience, 0.15}, {content_moderation, 0.10}, {security, 0.0},
              {ethical, 0.0}, {robustness, 0.0}, {long_term_societal, 0.0},
              {ai_alignment, 0.0}, {interpretability, 0.0}};
    case Source::crowdsourced:
      return {{privacy, 0.20}, {misinformation, 0.20}, {bias, 0.15},
              {user_experience, 0.0}, {content_moderation, 0.0}, {security, 0.15},
              {ethical, 0.15}, {robustness, 0.15}, {long_term_societal, 0.0},
              {ai_alignment, 0.0}, {interpretability, 0.0}};
    case Source::expert:
      return {{privacy, 0.0}, {misinformation, 0.0}, {bias, 0.0},
              {user_experience, 0.0}, {content_moderation, 0.0}, {security, 0.20},
              {ethical, 0.20}, {robustness, 0.15}, {long_term_societal, 0.20},
              {ai_alignment, 0.15}, {interpretability, 0.10}};
  }
  return {};
}

inline SourceProfile default_profile(Source s, Preset preset = Preset::main_text,
                                     DamageModel model = DamageModel::lomax) {
  SourceProfile p;
  p.source = s;
  p.damage_model = model;
  p.risk_prior = default_risk_prior(s);
  const bool main = preset == Preset::main_text;
  switch (s) {
    case Source::community:
      p.lambda = 25; p.cost_mu = 1.5; p.cost_sigma = 0.5;
      p.acc_alpha = 5; p.acc_beta = 2;
      p.dmg_shape = 3; p.dmg_scale = 100;
      break;
    case Source::crowdsourced:
      p.lambda = 12; p.cost_mu = 2.0; p.cost_sigma = 0.6;
      p.acc_alpha = 3; p.acc_beta = 3;
      p.dmg_shape = 2; p.dmg_scale = main ? 200 : 150;
      break;
    case Source::expert:
      p.lambda = 5; p.cost_mu = 3.0; p.cost_sigma = 0.7;
      p.acc_alpha = 2; p.acc_beta = 5;
      p.dmg_shape = 1.5; p.dmg_scale = main ? 500 : 250;
      break;
  }
  return p;
}

inline ProfileSet default_profiles(Preset preset = Preset::main_text,
                                   DamageModel model = DamageModel::lomax) {
  return {default_profile(Source::community, preset, model),
          default_profile(Source::crowdsourced, preset, model),
          default_profile(Source::expert, preset, model)};
}

// ---------------------------------------------------------------------------
// Feedback configuration (dynamics live in feedback.hpp)
// ---------------------------------------------------------------------------

struct FeedbackConfig {
  double gamma_I = 0.1;   // incentive adjustment speed
  double beta_I = 0.5;    // expected processing rate
  double I_min = 0.5;
  double I_max = 1.5;
  double gamma_O = 0.05;  // mitigation effectiveness
  double delta_O = 0.1;   // recovery rate
  double O_min = 0.2;
  double O_max = 2.0;
  std::array<double, kSourceCount> initial_incentive{1.0, 1.0, 1.0};
  double initial_occurrence = 1.0;
  /// Per-type overrides of initial_occurrence.
  std::map<RiskType, double> initial_occurrence_by_type;
  /// When set, recovery is applied only in months where nothing of that type
  /// was processed.
  bool recover_only_when_unmitigated = false;

  double initial_occurrence_for(const RiskType& rt) const {
    auto it = initial_occurrence_by_type.find(rt);
    return it == initial_occurrence_by_type.end() ? initial_occurrence : it->second;
  }
};

// ---------------------------------------------------------------------------
// Simulation configuration
// ---------------------------------------------------------------------------

struct SimulationConfig {
  int duration_months = 15;
  int observation_months = 3;
  double capacity_fraction = 0.5;
  Policy policy = Policy::non_prioritised;
  std::uint64_t master_seed = 0;
  ProfileSet profiles = default_profiles();
  std::optional<FeedbackConfig> feedback;
  bool fifo_skip_mode = false;
  /// Continue past duration_months with zero arrivals until the backlog empties.
  bool drain = false;
  /// Number of leading processed ids to keep per month in the metrics (0 = off).
  int first_processed_log = 10;
};

// ---------------------------------------------------------------------------
// Selection and metrics
// ---------------------------------------------------------------------------

struct Selection {
  std::vector<ReportId> ids;
  double total_cost = 0.0;

  bool empty() const noexcept { return ids.empty(); }
  std::size_t size() const noexcept { return ids.size(); }
};

struct FeedbackSnapshot {
  std::array<double, kSourceCount> incentive{};
  std::map<RiskType, double> occurrence;
};

struct MonthlyMetrics {
  int month = 0;
  std::array<int, kSourceCount> arrivals_by_source{};
  std::array<int, kSourceCount> processed_by_source{};
  std::map<RiskType, int> processed_by_risk_type;
  int arrivals = 0;
  int processed = 0;
  int backlog = 0;
  double capacity = 0.0;  // zero during observation months
  double capacity_used = 0.0;
  double mean_cost = 0.0;
  double mean_accessibility = 0.0;
  double mean_damage = 0.0;
  double mean_priority = 0.0;
  double damage_mitigated = 0.0;
  std::vector<ReportId> first_processed;
  std::optional<FeedbackSnapshot> feedback;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

inline bool finite(double x) { return std::isfinite(x); }

}  // namespace detail

/// Validates a prior and renormalises it when the mass is within 1e-6 of one.
inline RiskPrior validate_prior(RiskPrior prior, const std::string& field) {
  detail::require(!prior.empty(), field, "risk prior is empty");
  double sum = 0.0;
  for (const auto& [rt, w] : prior) {
    detail::require(!rt.empty(), field, "risk type label is empty");
    detail::require(w >= 0.0 && detail::finite(w), field, "probability for '" + rt + "' is negative");
    sum += w;
  }
  detail::require(std::abs(sum - 1.0) <= 1e-6, field,
                  "probabilities sum to " + std::to_string(sum) + ", expected 1");
  for (auto& entry : prior) entry.second /= sum;
  return prior;
}

inline SourceProfile validate_profile(SourceProfile p) {
  const std::string base = "profiles." + std::string(to_string(p.source)) + ".";
  detail::require(p.lambda >= 0.0 && detail::finite(p.lambda), base + "lambda", "must be >= 0");
  detail::require(detail::finite(p.cost_mu), base + "cost_mu", "must be finite");
  detail::require(p.cost_sigma >= 0.0 && detail::finite(p.cost_sigma), base + "cost_sigma",
                  "must be >= 0");
  detail::require(p.acc_alpha > 0.0 && detail::finite(p.acc_alpha), base + "acc_alpha", "must be > 0");
  detail::require(p.acc_beta > 0.0 && detail::finite(p.acc_beta), base + "acc_beta", "must be > 0");
  detail::require(p.dmg_shape > 0.0 && detail::finite(p.dmg_shape), base + "dmg_shape", "must be > 0");
  detail::require(p.dmg_scale > 0.0 && detail::finite(p.dmg_scale), base + "dmg_scale", "must be > 0");
  p.risk_prior = validate_prior(std::move(p.risk_prior), base + "risk_prior");
  return p;
}

inline void validate_feedback(const FeedbackConfig& f) {
  using detail::require;
  require(f.I_min > 0.0 && f.I_min <= f.I_max, "feedback.I_min", "need 0 < I_min <= I_max");
  require(f.O_min > 0.0 && f.O_min <= f.O_max, "feedback.O_min", "need 0 < O_min <= O_max");
  require(f.gamma_I >= 0.0 && detail::finite(f.gamma_I), "feedback.gamma_I", "must be >= 0");
  require(f.gamma_O >= 0.0 && detail::finite(f.gamma_O), "feedback.gamma_O", "must be >= 0");
  require(f.delta_O >= 0.0 && detail::finite(f.delta_O), "feedback.delta_O", "must be >= 0");
  require(f.beta_I >= 0.0 && f.beta_I <= 1.0, "feedback.beta_I", "must lie in [0, 1]");
  for (Source s : kAllSources) {
    const double i0 = f.initial_incentive[index_of(s)];
    require(i0 >= f.I_min && i0 <= f.I_max,
            "feedback.initial_incentive." + std::string(to_string(s)), "outside [I_min, I_max]");
  }
  require(f.initial_occurrence >= f.O_min && f.initial_occurrence <= f.O_max,
          "feedback.initial_occurrence", "outside [O_min, O_max]");
  for (const auto& [rt, o] : f.initial_occurrence_by_type)
    require(o >= f.O_min && o <= f.O_max, "feedback.initial_occurrence." + rt,
            "outside [O_min, O_max]");
}

/// Returns a copy of `config` with priors renormalised, or throws
/// ValidationError naming the first violated field.
inline SimulationConfig validate_config(SimulationConfig config) {
  using detail::require;
  require(config.observation_months >= 1, "observation_months", "must be >= 1");
  require(config.duration_months > config.observation_months, "duration_months",
          "must exceed observation_months");
  require(config.capacity_fraction > 0.0 && detail::finite(config.capacity_fraction),
          "capacity_fraction", "must be finite and > 0");
  require(config.first_processed_log >= 0, "first_processed_log", "must be >= 0");
  for (Source s : kAllSources) {
    auto& p = config.profiles[index_of(s)];
    require(p.source == s, "profiles", "profile order must be community, crowdsourced, expert");
    p = validate_profile(std::move(p));
  }
  if (config.feedback) validate_feedback(*config.feedback);
  return config;
}

}  // namespace supervisim
