#include <benchmark/benchmark.h>

#include "salmoe/fit.hpp"
#include "salmoe/gating.hpp"
#include "salmoe/sal_kernel.hpp"
#include "salmoe/scenario.hpp"

using namespace salmoe;

namespace {

Dataset table1_data(Eigen::Index n) {
  ScenarioSpec spec;
  spec.truth = table1_model();
  spec.n = n;
  Rng rng(42);
  return generate(spec, rng);
}

void BM_SalLogDensity(benchmark::State& state) {
  double y = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sal_log_density(y, 0.1, 0.8, 0.2));
    y += 1e-6;
  }
}
BENCHMARK(BM_SalLogDensity);

void BM_EStep(benchmark::State& state) {
  const Dataset d = table1_data(state.range(0));
  const SalMoeModel m = table1_model();
  for (auto _ : state) benchmark::DoNotOptimize(e_step(m, d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EStep)->Arg(500)->Arg(2000)->Arg(10000);

void BM_MmUpdate(benchmark::State& state) {
  const Dataset d = table1_data(state.range(0));
  const SalMoeModel m = table1_model();
  const Responsibilities gamma = e_step(m, d).gamma;
  const GatingDesign design(d.T);
  GatingParams E(m.K(), m.q);
  for (auto _ : state) {
    E = mm_update(E, design, gamma);
    benchmark::DoNotOptimize(E.coef().data());
  }
}
BENCHMARK(BM_MmUpdate)->Arg(500)->Arg(2000);

void BM_FitFromTruth(benchmark::State& state) {
  const Dataset d = table1_data(state.range(0));
  FitConfig cfg;
  cfg.K = 2;
  for (auto _ : state) benchmark::DoNotOptimize(em_mm_fit(d, cfg, table1_model()));
}
BENCHMARK(BM_FitFromTruth)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitWithRestarts(benchmark::State& state) {
  const Dataset d = table1_data(500);
  FitConfig cfg;
  cfg.K = 2;
  cfg.restarts = static_cast<int>(state.range(0));
  cfg.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(fit_salmoe(d, cfg));
}
BENCHMARK(BM_FitWithRestarts)->Arg(1)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
