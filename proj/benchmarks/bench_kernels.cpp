#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "scflow/curvature.hpp"
#include "scflow/flow.hpp"
#include "scflow/surface.hpp"

namespace {

using namespace scflow;

GraphFunction wave(int points) {
  return GraphFunction::sample(GridChart::uniform(2, points, 2.0 * std::numbers::pi), [](const SpatialVector& x) {
    return 2.0 + 0.005 * std::sin(x[0]) + 0.003 * std::cos(x[1]);
  });
}

void BM_Geometry(benchmark::State& state) {
  const GraphFunction u = wave(static_cast<int>(state.range(0)));
  const auto metric = exp_warp_metric(2);
  GeometryOptions options;
  options.audit_inverse = false;
  SurfaceGeometry geo;
  for (auto _ : state) {
    compute_geometry(u, *metric, options, geo);
    benchmark::DoNotOptimize(geo.kappa.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(u.size()));
}
BENCHMARK(BM_Geometry)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_FlowStep(benchmark::State& state) {
  const auto metric = exp_warp_metric(2);
  const auto rhs = effective_rhs(
      make_rhs({"time-profile", {{"amplitude", 1.0}, {"rate", 1.0}, {"center", 1.0}}}, metric), CutoffConfig{4.0},
      metric);
  FlowConfig config;
  config.scheme = static_cast<TimeScheme>(state.range(1));
  config.upper = wave(static_cast<int>(state.range(0)));
  config.lower = GraphFunction::constant(config.upper.chart, 0.0);
  const FlowState initial = initialize(config, *metric, *rhs);
  FlowState current = initial;
  for (auto _ : state) {
    step(current, config, *metric, *rhs);
    benchmark::DoNotOptimize(current.u.values.data());
  }
}
BENCHMARK(BM_FlowStep)
    ->Args({64, static_cast<int>(TimeScheme::SSPRK3)})
    ->Args({64, static_cast<int>(TimeScheme::SSPRK2)})
    ->Args({64, static_cast<int>(TimeScheme::Euler)})
    ->Unit(benchmark::kMillisecond);

std::vector<std::vector<double>> cone_samples(int n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> box(-1.0, 2.0);
  std::vector<std::vector<double>> out;
  while (out.size() < 1024) {
    std::vector<double> k(n);
    for (double& x : k) x = box(rng);
    if (gamma_k_member(k, 2)) out.push_back(k);
  }
  return out;
}

void BM_HSequence(benchmark::State& state) {
  const auto samples = cone_samples(static_cast<int>(state.range(0)));
  std::vector<double> out(samples[0].size());
  std::size_t i = 0;
  for (auto _ : state) {
    h_sequence(samples[i++ % samples.size()], out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_HSequence)->Arg(2)->Arg(3)->Arg(5)->Arg(8);

void BM_GradSigma2(benchmark::State& state) {
  const auto samples = cone_samples(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(grad_sigma2(samples[i++ % samples.size()]));
}
BENCHMARK(BM_GradSigma2)->Arg(2)->Arg(5);

void BM_Battery(benchmark::State& state) {
  const auto samples = cone_samples(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(inequality_battery(samples[i++ % samples.size()]));
}
BENCHMARK(BM_Battery)->Arg(3)->Arg(5);

}  // namespace
BENCHMARK_MAIN();
