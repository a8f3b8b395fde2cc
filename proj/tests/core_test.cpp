#include <gtest/gtest.h>

#include <cmath>

#include "supervisim/core.hpp"

namespace sv = supervisim;

TEST(PriorityScore, ZeroAccessibilityGivesZero) { EXPECT_EQ(sv::priority_score(0.0, 1000.0), 0.0); }

TEST(PriorityScore, UnitLogArgument) {
  EXPECT_NEAR(sv::priority_score(1.0, std::exp(1.0) - 1.0), 1.0, 1e-15);
}

TEST(PriorityScore, HalfAccessibilityHundredDamage) {
  // ln(51), evaluated at 30 digits with mpmath.
  EXPECT_NEAR(sv::priority_score(0.5, 100.0), 3.9318256327243257, 1e-12);
}

TEST(PriorityScore, RejectsOutOfRange) {
  EXPECT_THROW(sv::priority_score(-0.1, 1.0), sv::ValidationError);
  EXPECT_THROW(sv::priority_score(1.1, 1.0), sv::ValidationError);
  EXPECT_THROW(sv::priority_score(0.5, -1.0), sv::ValidationError);
  EXPECT_THROW(sv::priority_score(0.5, INFINITY), sv::ValidationError);
  EXPECT_THROW(sv::priority_score(NAN, 1.0), sv::ValidationError);
}

TEST(PriorityScore, FunctionOfProductOnly) {
  for (double a : {0.1, 0.25, 0.5, 0.8, 1.0})
    for (double d : {0.0, 1.0, 3.5, 100.0, 2e4})
      EXPECT_DOUBLE_EQ(sv::priority_score(a, d), sv::priority_score(1.0, a * d));
}

TEST(PriorityScore, StrictlyIncreasingInEachArgument) {
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double p = sv::priority_score(i / 100.0, 42.0);
    EXPECT_GT(p, prev);
    prev = p;
  }
  prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double p = sv::priority_score(0.3, i * 7.0);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(Report, InvariantsChecked) {
  auto r = sv::make_report(1, 2, 3.0, 0.5, 100.0, sv::Source::expert, "Security");
  EXPECT_NO_THROW(sv::check_report(r));
  r.processed_month = 1;
  EXPECT_THROW(sv::check_report(r), sv::ValidationError);
  r.processed_month = 2;
  r.priority += 1e-6;
  EXPECT_THROW(sv::check_report(r), sv::ValidationError);
  EXPECT_THROW(sv::make_report(1, 0, 0.0, 0.5, 1.0, sv::Source::expert, "X"), sv::ValidationError);
}

TEST(ValidateConfig, DefaultsAccepted) {
  const auto c = sv::validate_config(sv::SimulationConfig{});
  EXPECT_EQ(c.duration_months, 15);
  EXPECT_EQ(c.observation_months, 3);
  EXPECT_DOUBLE_EQ(c.capacity_fraction, 0.5);
}

TEST(ValidateConfig, EmptyProcessingHorizonRejected) {
  sv::SimulationConfig c;
  c.duration_months = 3;
  try {
    sv::validate_config(c);
    FAIL() << "expected rejection";
  } catch (const sv::ValidationError& e) {
    EXPECT_EQ(e.field(), "duration_months");
  }
}

TEST(ValidateConfig, PriorMassDeficitRejected) {
  sv::SimulationConfig c;
  c.profiles[0].risk_prior.back().second = 0.0;
  c.profiles[0].risk_prior[0].second = 0.2;  // sums to 0.9
  try {
    sv::validate_config(c);
    FAIL() << "expected rejection";
  } catch (const sv::ValidationError& e) {
    EXPECT_EQ(e.field(), "profiles.community.risk_prior");
  }
}

TEST(ValidateConfig, NearUnitPriorRenormalised) {
  sv::SimulationConfig c;
  c.profiles[2].risk_prior[5].second += 5e-7;
  const auto v = sv::validate_config(c);
  double sum = 0.0;
  for (const auto& [rt, w] : v.profiles[2].risk_prior) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(ValidateConfig, FieldNamesReported) {
  sv::SimulationConfig c;
  c.capacity_fraction = 0.0;
  EXPECT_THROW(sv::validate_config(c), sv::ValidationError);
  c = {};
  c.observation_months = 0;
  EXPECT_THROW(sv::validate_config(c), sv::ValidationError);
  c = {};
  c.profiles[1].acc_beta = 0.0;
  try {
    sv::validate_config(c);
    FAIL();
  } catch (const sv::ValidationError& e) {
    EXPECT_EQ(e.field(), "profiles.crowdsourced.acc_beta");
  }
  c = {};
  c.feedback = sv::FeedbackConfig{};
  c.feedback->I_min = 2.0;
  EXPECT_THROW(sv::validate_config(c), sv::ValidationError);
}

TEST(Profiles, DefaultsMatchPublishedTables) {
  const auto main = sv::default_profiles(sv::Preset::main_text);
  EXPECT_EQ(main[0].lambda, 25);
  EXPECT_EQ(main[1].lambda, 12);
  EXPECT_EQ(main[2].lambda, 5);
  EXPECT_EQ(main[0].dmg_scale, 100);
  EXPECT_EQ(main[1].dmg_scale, 200);
  EXPECT_EQ(main[2].dmg_scale, 500);
  EXPECT_EQ(main[2].dmg_shape, 1.5);
  const auto supp = sv::default_profiles(sv::Preset::supplementary);
  EXPECT_EQ(supp[1].dmg_scale, 150);
  EXPECT_EQ(supp[2].dmg_scale, 250);
  for (const auto& p : main) {
    double sum = 0.0;
    for (const auto& [rt, w] : p.risk_prior) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  EXPECT_EQ(main[0].risk_prior[0], (std::pair<sv::RiskType, double>{"Privacy", 0.30}));
}
