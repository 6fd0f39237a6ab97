// Microbenchmarks for the kernels everything else multiplies by: the walk
// stepping loop, branching generations, the reference-path solver, and the
// raw counter RNG.  Items/sec is reported in the unit that matters for
// budgeting (steps, generations, grid points, draws).

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "erwlab/branching.hpp"
#include "erwlab/cookie_law.hpp"
#include "erwlab/pbm.hpp"
#include "erwlab/rng.hpp"
#include "erwlab/stats.hpp"
#include "erwlab/walk.hpp"

namespace {

using namespace erw;

CheckedLaw single_stack(std::vector<double> probs) {
  CookieLaw law;
  law.cookies_per_site = static_cast<int>(probs.size());
  law.support.push_back({CookieStack(std::move(probs)), 1.0});
  return validate(law);
}

CheckedLaw fair() { return single_stack({0.5}); }
CheckedLaw half() { return single_stack({0.75}); }
CheckedLaw crit() { return single_stack({0.75, 0.75}); }

// ---- walk kernel -----------------------------------------------------------

void BM_WalkFixedSummary(benchmark::State& state, const CheckedLaw& law) {
  const std::int64_t n = state.range(0);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    const WalkRun run =
        run_fixed(law, SeedSpec{7001, ++stream}, n, RecordMode::summary);
    benchmark::DoNotOptimize(run.position);
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_WalkFixedFull(benchmark::State& state) {
  const CheckedLaw law = half();
  const std::int64_t n = state.range(0);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    const WalkRun run =
        run_fixed(law, SeedSpec{7002, ++stream}, n, RecordMode::full);
    benchmark::DoNotOptimize(run.position);
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_WalkFirstPassage(benchmark::State& state) {
  const CheckedLaw law = half();
  std::uint64_t stream = 0;
  std::int64_t steps = 0;
  for (auto _ : state) {
    const HitResult hr = run_to_hit(law, SeedSpec{7003, ++stream}, 64, 1 << 20);
    steps += hr.run.steps;
    benchmark::DoNotOptimize(hr.hit_time);
  }
  state.SetItemsProcessed(steps);
}

// ---- branching kernel ------------------------------------------------------

void BM_BranchStep(benchmark::State& state) {
  const CheckedLaw law = crit();
  const std::int64_t population = state.range(0);
  CounterRng rng(SeedSpec{7004, 0}, Dom::excursion);
  for (auto _ : state)
    benchmark::DoNotOptimize(branch_step(law, population, rng));
  state.SetItemsProcessed(state.iterations());
}

void BM_SampleLifetime(benchmark::State& state) {
  const CheckedLaw law = half();
  std::uint64_t stream = 0;
  std::int64_t generations = 0;
  for (auto _ : state) {
    const LifetimeSample s =
        sample_lifetime(law, SeedSpec{7005, ++stream}, 100000);
    generations += s.lifetime;
    benchmark::DoNotOptimize(s.progeny);
  }
  state.SetItemsProcessed(generations);
}

// ---- reference paths -------------------------------------------------------

void BM_SampleBmDriver(benchmark::State& state) {
  const std::int64_t points = state.range(0);
  const double dt = 1.0 / static_cast<double>(points);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    const GridPath path = sample_bm(dt, 1.0, SeedSpec{7006, ++stream});
    benchmark::DoNotOptimize(path.values.back());
  }
  state.SetItemsProcessed(state.iterations() * points);
}

void BM_SolvePbm(benchmark::State& state) {
  const std::int64_t points = state.range(0);
  const double dt = 1.0 / static_cast<double>(points);
  const GridPath driver = sample_bm(dt, 1.0, SeedSpec{7007, 1});
  for (auto _ : state) {
    const GridPath x = solve_pbm(driver, PbmParams{0.5, -0.5});
    benchmark::DoNotOptimize(x.values.back());
  }
  state.SetItemsProcessed(state.iterations() * points);
}

// ---- raw RNG and statistics ------------------------------------------------

void BM_RngU64(benchmark::State& state) {
  CounterRng rng(SeedSpec{7008, 0}, Dom::walk);
  for (auto _ : state) benchmark::DoNotOptimize(rng.next_u64());
  state.SetItemsProcessed(state.iterations());
}

void BM_KsTwoSample(benchmark::State& state) {
  CounterRng rng(SeedSpec{7009, 0}, Dom::gauss);
  std::vector<double> a(10000), b(10000);
  for (double& v : a) v = rng.next_unit();
  for (double& v : b) v = rng.next_unit();
  for (auto _ : state) {
    const KsResult ks = ks_two_sample(a, b);
    benchmark::DoNotOptimize(ks.statistic);
  }
  state.SetItemsProcessed(state.iterations() * 20000);
}

BENCHMARK_CAPTURE(BM_WalkFixedSummary, fair, fair())->Arg(4096);
BENCHMARK_CAPTURE(BM_WalkFixedSummary, half, half())->Arg(4096);
BENCHMARK_CAPTURE(BM_WalkFixedSummary, crit, crit())->Arg(4096);
BENCHMARK(BM_WalkFixedFull)->Arg(4096);
BENCHMARK(BM_WalkFirstPassage);
BENCHMARK(BM_BranchStep)->Arg(1)->Arg(16)->Arg(1024)->Arg(65536);
BENCHMARK(BM_SampleLifetime);
BENCHMARK(BM_SampleBmDriver)->Arg(10000);
BENCHMARK(BM_SolvePbm)->Arg(10000);
BENCHMARK(BM_RngU64);
BENCHMARK(BM_KsTwoSample);

}  // namespace

BENCHMARK_MAIN();
