#include <benchmark/benchmark.h>

#include "ruinkit/asymptotics.hpp"
#include "ruinkit/solver.hpp"

using namespace ruinkit;

namespace {

ModelParams beta_one() {
  ModelParams p;
  p.a = 1.0;
  p.sigma = 1.0;
  p.c = 1.0;
  p.alpha1 = 1.0;
  p.alpha2 = 0.5;
  p.mu1 = 1.0;
  p.mu2 = 2.0;
  return p;
}

void BM_SolveSurvival(benchmark::State& state) {
  const ModelParams p = beta_one();
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_survival(p, 1e-3, 1e6, n));
}
BENCHMARK(BM_SolveSurvival)->Arg(1000)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_IdeResidual(benchmark::State& state) {
  const ModelParams p = beta_one();
  const auto s = solve_survival(p, 1e-3, 1e6, 2000);
  for (auto _ : state) benchmark::DoNotOptimize(ide_residual(s, p));
}
BENCHMARK(BM_IdeResidual)->Unit(benchmark::kMicrosecond);

void BM_TrackRoots(benchmark::State& state) {
  const ModelParams p = beta_one();
  const auto grid = geometric_grid(1e-2, 1e4, 200);
  for (auto _ : state) benchmark::DoNotOptimize(track_roots(p, grid));
}
BENCHMARK(BM_TrackRoots)->Unit(benchmark::kMicrosecond);

}  // namespace
