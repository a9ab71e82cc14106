#include <benchmark/benchmark.h>

#include "krw/harmonic.hpp"
#include "krw/kbm.hpp"
#include "krw/solve.hpp"
#include "krw/snake.hpp"

using namespace krw;

namespace {

// Escape-probability solve on the planar ball; the argument is R.
void BM_SolveBall2d(benchmark::State& state) {
  const auto k = KillingField::power_law(1.6);
  const auto R = state.range(0);
  for (auto _ : state) {
    auto s = solve_escape(k, Exhaustion::ball(), 2, R);
    benchmark::DoNotOptimize(s(Point{1, 0}));
  }
  state.SetComplexityN(R);
}
BENCHMARK(BM_SolveBall2d)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMillisecond);

void BM_SolveHalfPlane(benchmark::State& state) {
  const auto k = KillingField::power_law(1.6);
  const auto ex = Exhaustion::ball_plus_half_space(0, -1);
  for (auto _ : state) {
    auto s = solve_escape(k, ex, 2, state.range(0));
    benchmark::DoNotOptimize(s(Point{1, 0}));
  }
}
BENCHMARK(BM_SolveHalfPlane)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_PotentialKernelTable(benchmark::State& state) {
  for (auto _ : state) {
    PotentialKernelTable t(static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(t(Point{1, 1}));
  }
}
BENCHMARK(BM_PotentialKernelTable)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_HittingMonteCarlo(benchmark::State& state) {
  RandomStream rng(1, 0);
  HittingMcOptions opt;
  opt.samples = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(hitting_before_zero_mc(Point{7, -3}, Point{-4, 9}, rng, opt).mean);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * opt.samples));
}
BENCHMARK(BM_HittingMonteCarlo)->Unit(benchmark::kMillisecond);

// One k(x) sample in d = 4 from the pruned sampler; the argument is |x|.
void BM_HitSamplerMultitype(benchmark::State& state) {
  HitSampler s(OffspringLaw::geometric_half());
  RandomStream rng(2, 0);
  const Point x{state.range(0), 0, 0, 0};
  for (auto _ : state) benchmark::DoNotOptimize(s.multitype(x, kDefaultNodeCap, rng).hit);
}
BENCHMARK(BM_HitSamplerMultitype)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

void BM_SnakeTrial(benchmark::State& state) {
  HitSampler bushes(OffspringLaw::geometric_half());
  RandomStream rng(3, 0);
  const auto ex = Exhaustion::ball();
  for (auto _ : state)
    benchmark::DoNotOptimize(snake_trial(Point{4, 0, 0, 0}, bushes, ex, state.range(0), rng));
}
BENCHMARK(BM_SnakeTrial)->Arg(8)->Arg(16);

// Killed Brownian path from (4,0) to |x| = 8.
void BM_KbmPath(benchmark::State& state) {
  auto cfg = KbmConfig::power_law(1.0, 0.16);
  RandomStream rng(4, 0);
  const auto target = Target::outside_ball(8);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_until(cfg, {4, 0}, target, rng).hazard);
}
BENCHMARK(BM_KbmPath);

}  // namespace

BENCHMARK_MAIN();
