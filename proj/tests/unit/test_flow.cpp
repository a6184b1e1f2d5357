#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scflow/errors.hpp"
#include "scflow/flow.hpp"

namespace scflow {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// exp-warp, f = e^{-(x^0 - 1)}, barriers u_1 = 0 and u_2 = `upper`.
struct Scenario {
  std::shared_ptr<const AmbientMetric> metric = exp_warp_metric(2);
  std::shared_ptr<const GridChart> chart;
  std::shared_ptr<const EffectiveRhs> rhs;
  FlowConfig config;

  explicit Scenario(int points = 16, double amplitude = 0.0, double upper = 2.0) {
    chart = GridChart::uniform(2, points, kTwoPi);
    rhs = effective_rhs(make_rhs({"time-profile", {{"amplitude", 1.0}, {"rate", 1.0}, {"center", 1.0}}}, metric),
                        CutoffConfig{4.0}, metric);
    config.lower = GraphFunction::constant(chart, 0.0);
    config.upper = GraphFunction::sample(
        chart, [&](const SpatialVector& x) { return upper + amplitude * std::sin(x[0]); });
  }
};

TEST(Initialize, UmbilicUpperBarrierIsValid) {
  for (double c : {0.5, 1.0, 1.7}) {
    Scenario s;
    s.rhs = effective_rhs(make_rhs({"time-profile", {{"amplitude", 1.0}, {"rate", 1.0}, {"center", c}}}, s.metric),
                          CutoffConfig{4.0}, s.metric);
    s.config.upper = GraphFunction::constant(s.chart, c + 1.0);
    s.config.lower = GraphFunction::constant(s.chart, c - 1.0);
    const FlowState state = initialize(s.config, *s.metric, *s.rhs);
    EXPECT_EQ(state.t, 0.0);
    EXPECT_EQ(state.u.values, s.config.upper.values);
    for (std::size_t k = 0; k < state.u.size(); ++k) {
      EXPECT_NEAR(state.eval.sigma2[k], 1.0, 1e-12);
      EXPECT_NEAR(state.eval.target[k], std::exp(-1.0), 1e-15);
    }
  }
}

TEST(Initialize, FlatStaticConstantBarrierIsRejected) {
  Scenario s;
  s.metric = flat_static_metric(2);
  s.rhs = effective_rhs(make_rhs({"constant", {{"value", 1.0}}}, s.metric), CutoffConfig{4.0}, s.metric);
  try {
    initialize(s.config, *s.metric, *s.rhs);
    FAIL() << "expected InvalidBarrierError";
  } catch (const InvalidBarrierError& e) {
    EXPECT_LT(e.node(), s.chart->size());
    EXPECT_LE(e.margin(), 0.0);
  }
}

TEST(Initialize, CrossedBarriersAreAConfigError) {
  Scenario s;
  s.config.lower.values[5] = 2.5;
  try {
    initialize(s.config, *s.metric, *s.rhs);
    FAIL() << "expected ConfigError";
  } catch (const InvalidBarrierError&) {
    FAIL() << "crossed barriers are a plain configuration error";
  } catch (const ConfigError&) {
  }
}

TEST(Initialize, UpperBarrierBelowTargetIsRejected) {
  Scenario s(16, 0.0, 0.5);  // F = 1 < e^{0.5} = f
  EXPECT_THROW(initialize(s.config, *s.metric, *s.rhs), InvalidBarrierError);
}

TEST(Initialize, LowerBarrierAboveTargetIsRejected) {
  Scenario s(16, 0.0, 2.0);
  s.config.lower = GraphFunction::constant(s.chart, 1.5);  // F = 1 > e^{-0.5} = f
  EXPECT_THROW(initialize(s.config, *s.metric, *s.rhs), InvalidBarrierError);
}

TEST(Initialize, NonPositiveTarget) {
  Scenario s;
  s.rhs = effective_rhs(make_rhs({"affine-time", {{"intercept", -3.0}, {"slope", 1.0}}}, s.metric),
                        CutoffConfig{4.0}, s.metric);
  EXPECT_THROW(initialize(s.config, *s.metric, *s.rhs), PositivityViolation);
}

TEST(Initialize, RejectsBadSettings) {
  Scenario s;
  s.config.dt_safety = 0.0;
  EXPECT_THROW(initialize(s.config, *s.metric, *s.rhs), ConfigError);
  s.config.dt_safety = 0.2;
  s.config.scheme = TimeScheme::SSPRK2;
  s.config.stages = 1;
  EXPECT_THROW(initialize(s.config, *s.metric, *s.rhs), ConfigError);
  EXPECT_THROW(parse_time_scheme("rk4"), ConfigError);
  EXPECT_EQ(parse_time_scheme("ssprk2"), TimeScheme::SSPRK2);
}

class SymmetricStep : public ::testing::TestWithParam<TimeScheme> {};

TEST_P(SymmetricStep, MatchesScalarOde) {
  Scenario s;
  s.config.scheme = GetParam();
  FlowState state = initialize(s.config, *s.metric, *s.rhs);
  for (int i = 0; i < 5; ++i) {
    const double before = state.u.values[0];
    step(state, s.config, *s.metric, *s.rhs);
    const double dt = state.dt_current;
    double expected = 0.0;
    switch (GetParam()) {
      case TimeScheme::Euler: expected = oracle::height_euler_step(before, dt); break;
      case TimeScheme::SSPRK3: expected = oracle::height_ssprk3_step(before, dt); break;
      case TimeScheme::SSPRK2: expected = oracle::height_ssprk2_step(before, dt, s.config.stages); break;
    }
    for (double u : state.u.values) {
      EXPECT_EQ(u, state.u.values[0]);
      EXPECT_NEAR(u, expected, 1e-13);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Schemes, SymmetricStep,
                         ::testing::Values(TimeScheme::Euler, TimeScheme::SSPRK3, TimeScheme::SSPRK2));

TEST(Step, StationaryStateDoesNotMove) {
  Scenario s(16, 0.0, 1.0);
  FlowState state = initialize(s.config, *s.metric, *s.rhs);
  const double dt0 = stable_dt(state, s.config);
  step(state, s.config, *s.metric, *s.rhs);
  for (double u : state.u.values) EXPECT_NEAR(u, 1.0, 1e-15);
  EXPECT_EQ(state.dt_current, dt0);
  EXPECT_EQ(stable_dt(state, s.config), dt0);
}

TEST(Step, FirstStepFromUpperBarrierDescends) {
  Scenario s(32, 0.005);
  for (TimeScheme scheme : {TimeScheme::Euler, TimeScheme::SSPRK3, TimeScheme::SSPRK2}) {
    s.config.scheme = scheme;
    FlowState state = initialize(s.config, *s.metric, *s.rhs);
    for (double v : state.eval.velocity) EXPECT_LT(v, 0.0);
    const std::vector<double> before = state.u.values;
    step(state, s.config, *s.metric, *s.rhs);
    for (std::size_t k = 0; k < before.size(); ++k) EXPECT_LT(state.u.values[k], before[k]);
  }
}

TEST(Step, SspCoefficientScalesDt) {
  Scenario s;
  FlowState state = initialize(s.config, *s.metric, *s.rhs);
  s.config.scheme = TimeScheme::Euler;
  const double euler = stable_dt(state, s.config);
  s.config.scheme = TimeScheme::SSPRK3;
  EXPECT_EQ(stable_dt(state, s.config), euler);
  s.config.scheme = TimeScheme::SSPRK2;
  s.config.stages = 6;
  EXPECT_DOUBLE_EQ(ssp_coefficient(s.config), 5.0);
  EXPECT_NEAR(stable_dt(state, s.config), 5.0 * euler, 1e-15 * euler);
}

TEST(Step, HalvingExhaustionIsABreakdown) {
  Scenario s;
  FlowState state = initialize(s.config, *s.metric, *s.rhs);
  FlowConfig strict = s.config;
  strict.admissibility_margin = 2.0;  // H_2 = 1 everywhere: no attempt can pass
  strict.max_halvings = 3;
  EXPECT_THROW(step(state, strict, *s.metric, *s.rhs), FlowBreakdown);
  EXPECT_EQ(state.rejected_steps, 4u);
  EXPECT_EQ(state.steps, 0u);
}

TEST(Run, ConstantDataTracksOde) {
  Scenario s(32);
  s.config.scheme = TimeScheme::SSPRK2;
  s.config.dt_safety = 0.45;
  const FlowResult result = run(s.config, *s.metric, *s.rhs);
  ASSERT_EQ(result.verdict, Verdict::Converged) << result.message;
  for (double u : result.state.u.values) EXPECT_LT(std::abs(u - 1.0), 1e-6);
  for (const TraceRow& row : result.trace.rows()) {
    const double exact = oracle::height_closed_form(2.0, row.t);
    EXPECT_NEAR(row.u_max, exact, 1e-6) << "t=" << row.t;
    EXPECT_EQ(row.u_min, row.u_max);
  }
  EXPECT_TRUE(result.cutoff_inactive);
}

TEST(Run, PerturbedDataKeepsInvariants) {
  Scenario s(24, 0.005);
  s.config.scheme = TimeScheme::SSPRK2;
  s.config.dt_safety = 0.45;
  const FlowResult result = run(s.config, *s.metric, *s.rhs);
  ASSERT_EQ(result.verdict, Verdict::Converged) << result.message;
  EXPECT_GE(result.monitors.min_res, -s.config.tol_sign);
  EXPECT_LE(result.monitors.max_increase, s.config.tol_sign);
  EXPECT_LE(result.monitors.barrier_excess, 10.0 * s.config.tol_sign);
  EXPECT_LE(result.monitors.max_vtilde, result.monitors.vtilde_ceiling);
  EXPECT_LE(result.monitors.max_kappa, result.monitors.kappa_ceiling);

  // Stationary residual on the final surface.
  NodeEvaluation eval;
  evaluate_nodes(result.state.u, result.state.geometry, *s.rhs, s.config, eval);
  for (std::size_t k = 0; k < eval.sigma2.size(); ++k) {
    EXPECT_LT(std::abs(eval.sigma2[k] - eval.target[k]), s.config.tol_converge);
  }

  const auto& rows = result.trace.rows();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].t, rows[i - 1].t);
    EXPECT_LE(rows[i].u_max, rows[i - 1].u_max + 1e-10);
  }
}

TEST(Run, ZeroTimeBudgetTimesOut) {
  Scenario s;
  s.config.t_max = 0.0;
  const FlowResult result = run(s.config, *s.metric, *s.rhs);
  EXPECT_EQ(result.verdict, Verdict::Timeout);
  EXPECT_EQ(result.state.steps, 0u);
  EXPECT_EQ(result.trace.rows().size(), 1u);
}

TEST(Run, ShortBudgetTimesOutWithCleanTrace) {
  Scenario s;
  s.config.t_max = 0.05;
  const FlowResult result = run(s.config, *s.metric, *s.rhs);
  EXPECT_EQ(result.verdict, Verdict::Timeout);
  EXPECT_GE(result.state.t, 0.05);
  EXPECT_GE(result.monitors.min_res, -s.config.tol_sign);
  EXPECT_GT(result.trace.rows().size(), 1u);
}

TEST(Run, DeterministicTrace) {
  Scenario s(16, 0.005);
  s.config.t_max = 0.5;
  std::ostringstream a, b;
  run(s.config, *s.metric, *s.rhs).trace.write_csv(a);
  run(s.config, *s.metric, *s.rhs).trace.write_csv(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "t,sup_res,min_res,max_vtilde,max_kappa,min_H2,u_min,u_max,dt");
}

TEST(Trace, RejectsDecreasingTime) {
  FlowTrace trace;
  trace.append(TraceRow{.t = 1.0});
  trace.append(TraceRow{.t = 1.0});
  EXPECT_THROW(trace.append(TraceRow{.t = 0.5}), ContractViolation);
}

TEST(Report, KeyValueLines) {
  Scenario s;
  s.config.t_max = 0.0;
  const FlowResult result = run(s.config, *s.metric, *s.rhs);
  std::ostringstream out;
  write_run_report(out, result, nullptr);
  const std::string text = out.str();
  EXPECT_NE(text.find("verdict=timeout\n"), std::string::npos);
  EXPECT_NE(text.find("cutoff_inactive=true\n"), std::string::npos);
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) EXPECT_NE(line.find('='), std::string::npos) << line;
}

}  // namespace
}  // namespace scflow
