// Microbenchmarks for the hot paths: the planning LP solve, the per-step
// simulation loop, and single item placements of the level heuristic.

#include <benchmark/benchmark.h>

#include <vector>

#include "sosmatch/arrivals.hpp"
#include "sosmatch/baselines.hpp"
#include "sosmatch/engine.hpp"
#include "sosmatch/harness.hpp"
#include "sosmatch/rng.hpp"
#include "sosmatch/spp.hpp"

using namespace sosmatch;

static void BM_SolvePlanningLp(benchmark::State& state) {
  const Preset p = make_preset(state.range(0) == 0 ? "instance2_default" : "instance1_standin");
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_spp(p.instance, p.rates.lambda));
  }
}
BENCHMARK(BM_SolvePlanningLp)->Arg(0)->Arg(1);

static void BM_EstimateStabilityRadius(benchmark::State& state) {
  const Preset p = make_preset("instance2_default");
  const SppSolution sol = solve_spp(p.instance, p.rates.lambda);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_epsilon0(p.instance, p.rates.lambda, sol));
  }
}
BENCHMARK(BM_EstimateStabilityRadius);

static void BM_SimulationStep(benchmark::State& state) {
  const Preset p = make_preset(state.range(0) == 0 ? "instance2_default" : "instance1_standin");
  const SppSolution sol = solve_spp(p.instance, p.rates.lambda);
  const long long horizon = 20000;
  ArrivalRates rates = p.rates;
  rates.horizon = horizon;
  auto policy = make_ss_policy();
  SimOptions opts;
  opts.keep_rows = false;
  uint64_t seed = 1;
  for (auto _ : state) {
    auto process = make_iid(p.instance, rates, seed++);
    benchmark::DoNotOptimize(simulate(p.instance, sol.basis, *process, *policy, opts));
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_SimulationStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_LevelPlacement(benchmark::State& state) {
  const int capacity = 9;
  const std::vector<int> sizes{2, 3};
  const std::vector<int> dead = dead_end_levels(capacity, sizes);
  Rng rng(7);
  LevelState level;
  level.open.assign(capacity, 0);
  long long placed = 0;
  for (auto _ : state) {
    const int size = sizes[rng.next_below(sizes.size())];
    benchmark::DoNotOptimize(csirik_place(level, size, capacity, true, dead));
    if (++placed % 4096 == 0) {
      level.open.assign(capacity, 0);  // keep the level counts small
      level.bins_opened = 0;
      level.volume_packed = 0;
    }
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LevelPlacement);

static void BM_HindsightFastPath(benchmark::State& state) {
  const Preset p = make_preset("instance2_default");
  const SppSolution sol = solve_spp(p.instance, p.rates.lambda);
  const double eps0 = estimate_epsilon0(p.instance, p.rates.lambda, sol);
  const BallCertificate cert{p.rates.lambda, sol.alpha_star, eps0};
  const std::vector<long long> counts{3521, 2987, 3492};
  for (auto _ : state) {
    benchmark::DoNotOptimize(hindsight_opt(p.instance, counts, &cert));
  }
}
BENCHMARK(BM_HindsightFastPath);

static void BM_HindsightLpPath(benchmark::State& state) {
  const Preset p = make_preset("instance2_default");
  const std::vector<long long> counts{3521, 2987, 3492};
  for (auto _ : state) {
    benchmark::DoNotOptimize(hindsight_opt(p.instance, counts, nullptr));
  }
}
BENCHMARK(BM_HindsightLpPath);
