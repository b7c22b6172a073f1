#include "enrichci/condnorm.hpp"
#include "enrichci/intervals.hpp"
#include "enrichci/sim.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace enrichci;

namespace {

ConditionalNormal truncated() { return ConditionalNormal(0.1, 1.0, 0.8, 0.2, 1.4); }

void BM_Cdf(benchmark::State& state) {
  const auto m = truncated();
  double x = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.cdf(x));
    x = x > 2.0 ? -1.0 : x + 0.01;
  }
}
BENCHMARK(BM_Cdf);

void BM_SolveUmpu(benchmark::State& state) {
  const auto m = truncated();
  for (auto _ : state) benchmark::DoNotOptimize(solve_umpu(m, 0.05));
}
BENCHMARK(BM_SolveUmpu);

void BM_UmauInterval(benchmark::State& state) {
  const auto m = truncated();
  for (auto _ : state) benchmark::DoNotOptimize(umau_ci(m, 0.6, 0.05));
}
BENCHMARK(BM_UmauInterval);

void BM_TostInterval(benchmark::State& state) {
  const auto m = truncated();
  for (auto _ : state) benchmark::DoNotOptimize(ctost_ci(m, 0.6, 0.05));
}
BENCHMARK(BM_TostInterval);

void BM_Scenario(benchmark::State& state) {
  Scenario s;
  s.design = TrialDesign{2, {0.5, 0.5}, 244, 244, 8.0, 0.05};
  s.rule = DecisionRule{RuleKind::d1, 1.0, false};
  s.true_deltas = {0.0, 0.0};
  s.replicates = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(s, RunOptions{1}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Scenario)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
