#include <gtest/gtest.h>

#include "supervisim/engine.hpp"
#include "supervisim/io.hpp"
#include "test_support.hpp"

namespace sv = supervisim;
using sv::testing::report;

namespace {

std::vector<sv::Report> batch_of_costs(std::vector<double> costs, sv::ReportId first_id, int month = 0) {
  std::vector<sv::Report> out;
  for (double c : costs) out.push_back(report(first_id++, c, 1.0, month));
  return out;
}

sv::SimulationConfig small_config(int T_obs, double C0, sv::Policy policy = sv::Policy::non_prioritised) {
  sv::SimulationConfig c;
  c.observation_months = T_obs;
  c.duration_months = T_obs + 1;
  c.capacity_fraction = C0;
  c.policy = policy;
  return c;
}

}  // namespace

TEST(Calibrate, AveragesMonthlyTotals) {
  const std::vector<std::vector<sv::Report>> months{batch_of_costs({50, 50}, 0), batch_of_costs({120}, 2),
                                                    batch_of_costs({100, 40}, 3)};
  EXPECT_DOUBLE_EQ(sv::calibrate_capacity(months, 0.5), 60.0);
}

TEST(Calibrate, SingleMonthIdentity) {
  const std::vector<std::vector<sv::Report>> months{batch_of_costs({30, 50}, 0)};
  EXPECT_DOUBLE_EQ(sv::calibrate_capacity(months, 1.0), 80.0);
}

TEST(Calibrate, NoReportsIsAnError) {
  const std::vector<std::vector<sv::Report>> months{{}, {}};
  EXPECT_THROW(sv::calibrate_capacity(months, 0.5), sv::CalibrationError);
  EXPECT_THROW(sv::calibrate_capacity({}, 0.5), sv::CalibrationError);
}

TEST(StepMonth, ObservationMonthsOnlyAccumulate) {
  sv::SimulationConfig c;
  sv::Simulator sim(c, 0);
  int cumulative = 0;
  for (int m = 0; m < c.observation_months; ++m) {
    EXPECT_TRUE(sim.in_observation());
    const auto mm = sim.step_month();
    cumulative += mm.arrivals;
    EXPECT_EQ(mm.processed, 0);
    EXPECT_EQ(mm.backlog, cumulative);
    EXPECT_EQ(mm.capacity, 0.0);
  }
  EXPECT_TRUE(sim.state().capacity.has_value());
  EXPECT_FALSE(sim.in_observation());
}

TEST(StepMonth, HandTraceAccounting) {
  // Month 0 observes five unit-cost reports: capacity = 0.8 * 5 = 4.
  // Month 1 adds three more; FIFO processes four of the eight.
  std::vector<std::vector<sv::Report>> batches{batch_of_costs({1, 1, 1, 1, 1}, 0),
                                               batch_of_costs({1, 1, 1}, 5, 1)};
  sv::Simulator sim(small_config(1, 0.8), batches);
  const auto m0 = sim.step_month();
  EXPECT_EQ(m0.backlog, 5);
  const auto m1 = sim.step_month();
  EXPECT_DOUBLE_EQ(m1.capacity, 4.0);
  EXPECT_EQ(m1.arrivals, 3);
  EXPECT_EQ(m1.processed, 4);
  EXPECT_EQ(m1.backlog, 4);
  EXPECT_EQ(m1.first_processed, (std::vector<sv::ReportId>{0, 1, 2, 3}));
  for (const auto& r : sim.state().processed) EXPECT_EQ(r.processed_month, 1);
}

TEST(RunSimulation, DefaultsGiveTwelveProcessingMonths) {
  sv::SimulationConfig c;
  c.master_seed = 5;
  const auto r = sv::run_simulation(c);
  ASSERT_EQ(r.metrics.size(), 15u);
  int processing = 0;
  for (const auto& m : r.metrics) processing += m.capacity > 0.0;
  EXPECT_EQ(processing, 12);
}

TEST(RunSimulation, AccountingAndConservationEveryMonth) {
  for (sv::Policy p : sv::kAllPolicies) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      sv::SimulationConfig c;
      c.policy = p;
      c.master_seed = seed;
      c.fifo_skip_mode = seed == 2;
      const auto r = sv::run_simulation(c);
      int prev = 0, generated = 0, processed = 0;
      for (const auto& m : r.metrics) {
        EXPECT_EQ(m.backlog, prev + m.arrivals - m.processed);
        EXPECT_LE(m.capacity_used, m.capacity + 1e-9);
        generated += m.arrivals;
        processed += m.processed;
        EXPECT_EQ(generated, m.backlog + processed);
        prev = m.backlog;
      }
      EXPECT_EQ(r.processed.size() + r.backlog.size(), static_cast<std::size_t>(generated));
      for (const auto& rep : r.processed) EXPECT_NO_THROW(sv::check_report(rep));
      for (const auto& rep : r.backlog) EXPECT_FALSE(rep.processed());
    }
  }
}

TEST(RunSimulation, SameSeedIdenticalOutput) {
  sv::SimulationConfig c;
  c.policy = sv::Policy::random;
  c.master_seed = 42;
  const auto a = sv::run_simulation(c), b = sv::run_simulation(c);
  EXPECT_EQ(sv::reports_to_csv(a.all_reports()), sv::reports_to_csv(b.all_reports()));
  EXPECT_EQ(sv::metrics_to_csv(a), sv::metrics_to_csv(b));
  c.master_seed = 43;
  EXPECT_NE(sv::reports_to_csv(a.all_reports()), sv::reports_to_csv(sv::run_simulation(c).all_reports()));
}

TEST(RunSimulation, DrainEmptiesBacklog) {
  for (sv::Policy p : sv::kAllPolicies) {
    sv::SimulationConfig c;
    c.policy = p;
    c.drain = true;
    c.master_seed = 9;
    c.fifo_skip_mode = true;
    const auto r = sv::run_simulation(c);
    EXPECT_TRUE(r.backlog.empty()) << sv::to_string(p);
    EXPECT_TRUE(r.warnings.empty());
    EXPECT_EQ(r.metrics.back().backlog, 0);
    EXPECT_GT(r.metrics.size(), 15u);
  }
}

TEST(RunSimulation, DrainCapReportsWarning) {
  // A single report of cost 1 observed with C_0 = 0.5 can never fit.
  std::vector<std::vector<sv::Report>> batches{batch_of_costs({1}, 0)};
  auto c = small_config(1, 0.5);
  c.drain = true;
  const auto r = sv::Simulator(c, batches).run();
  EXPECT_EQ(r.backlog.size(), 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.metrics.size(), 2u + 20u);
}

TEST(RunSimulation, CalibrationFailurePropagates) {
  sv::SimulationConfig c;
  for (auto& p : c.profiles) p.lambda = 0;
  EXPECT_THROW(sv::run_simulation(c), sv::CalibrationError);
}

TEST(RunSimulation, FirstProcessedLogFollowsPolicyOrder) {
  sv::SimulationConfig c;
  c.policy = sv::Policy::priority;
  c.master_seed = 4;
  const auto r = sv::run_simulation(c);
  for (const auto& m : r.metrics) {
    EXPECT_LE(m.first_processed.size(), 10u);
    if (m.processed >= 10) {
      EXPECT_EQ(m.first_processed.size(), 10u);
    }
  }
}

TEST(RunBatch, SingleRunSummaryEqualsRun) {
  sv::SimulationConfig c;
  c.policy = sv::Policy::priority;
  const auto b = sv::run_batch(c, 1, 77);
  ASSERT_EQ(b.runs.size(), 1u);
  const auto& run = b.runs[0];
  double sum = 0;
  for (const auto& r : run.processed) sum += r.priority;
  EXPECT_DOUBLE_EQ(b.summary.mean_priority, sum / run.processed.size());
  EXPECT_EQ(b.summary.processed, run.processed.size());
  for (std::size_t t = 0; t < run.metrics.size(); ++t)
    EXPECT_DOUBLE_EQ(b.summary.mean_backlog[t], run.metrics[t].backlog);
  EXPECT_EQ(run.seed(), 77u);
}

TEST(RunBatch, RunsUseDistinctStreams) {
  const auto b = sv::run_batch(sv::SimulationConfig{}, 3, 1);
  EXPECT_NE(sv::reports_to_csv(b.runs[0].all_reports()), sv::reports_to_csv(b.runs[1].all_reports()));
  EXPECT_NE(sv::reports_to_csv(b.runs[1].all_reports()), sv::reports_to_csv(b.runs[2].all_reports()));
}

TEST(RunBatch, ParallelMatchesSequential) {
  sv::SimulationConfig c;
  c.policy = sv::Policy::diversity;
  const auto seq = sv::run_batch(c, 8, 3, 1);
  const auto par = sv::run_batch(c, 8, 3, 4);
  for (std::size_t i = 0; i < 8; ++i)
    EXPECT_EQ(sv::reports_to_csv(seq.runs[i].all_reports()), sv::reports_to_csv(par.runs[i].all_reports()));
  EXPECT_EQ(seq.summary.mean_priority, par.summary.mean_priority);
}

TEST(RunBatch, RejectsZeroRuns) { EXPECT_THROW(sv::run_batch({}, 0), sv::ValidationError); }

TEST(RunBatch, NonPrioritisedBacklogTrendsUp) {
  sv::SimulationConfig c;
  const auto b = sv::run_batch(c, 100, 2024, 4);
  std::vector<double> processing(b.summary.mean_backlog.begin() + c.observation_months, b.summary.mean_backlog.end());
  EXPECT_GT(sv::testing::ols_slope(processing), 0.0);
}
