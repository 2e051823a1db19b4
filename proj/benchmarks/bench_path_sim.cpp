#include <benchmark/benchmark.h>

#include "ruinkit/mc_engine.hpp"
#include "ruinkit/path_sim.hpp"

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

void BM_NormalDraw(benchmark::State& state) {
  RandomStream r(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(r.normal());
}
BENCHMARK(BM_NormalDraw);

void BM_GbmStep(benchmark::State& state) {
  const int nsub = static_cast<int>(state.range(0));
  RandomStream r(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_gbm_step(0.5, 1.0, 0.7, nsub, r));
}
BENCHMARK(BM_GbmStep)->Arg(1)->Arg(8)->Arg(32)->Arg(128);

void BM_SimulatePath(benchmark::State& state) {
  const ModelParams p = beta_one();
  Horizon h;
  h.max_jumps = 10000;
  h.upper_barrier = 1e4;
  std::uint64_t id = 0;
  for (auto _ : state) {
    RandomStream r(3, id++);
    benchmark::DoNotOptimize(simulate_path(p, 10.0, h, kDefaultSubdivisions, r));
  }
}
BENCHMARK(BM_SimulatePath);

void BM_EstimateRuin(benchmark::State& state) {
  const ModelParams p = beta_one();
  Horizon h;
  h.upper_barrier = 1e4;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_ruin(p, 10.0, h, 10000, 5));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_EstimateRuin)->Unit(benchmark::kMillisecond);

}  // namespace
