#include <benchmark/benchmark.h>

#include <skm/skm.hpp>

namespace {

skm::ConstraintSystem instance(skm::Index n, skm::Index p, skm::Index q,
                               std::uint64_t seed, double scale) {
  skm::ConstraintSystem sys = skm::gen_feasible_mixed(n, p, q, seed);
  sys.y0 = skm::gen_infeasible_start(sys, skm::derive_seed(seed, 17), scale);
  return sys;
}

void BM_Transform(benchmark::State& state) {
  const auto n = static_cast<skm::Index>(state.range(0));
  const skm::ConstraintSystem sys = instance(n, n, n / 2, 42, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(skm::transform(sys));
  }
}
BENCHMARK(BM_Transform)->Arg(50)->Arg(100)->Arg(200);

void BM_Solve(benchmark::State& state) {
  const auto n = static_cast<skm::Index>(state.range(0));
  const skm::ConstraintSystem sys = instance(n, n, n / 2, 42, 100.0);
  skm::SkmConfig config;
  for (auto _ : state) {
    config.seed += 1;  // fresh sampling path each repetition
    benchmark::DoNotOptimize(skm::solve(sys, config));
  }
}
BENCHMARK(BM_Solve)->Arg(50)->Arg(100)->Arg(200);

void BM_SolveNaive(benchmark::State& state) {
  const auto n = static_cast<skm::Index>(state.range(0));
  const skm::ConstraintSystem sys = instance(n, n, n / 2, 42, 100.0);
  skm::SkmConfig config;
  for (auto _ : state) {
    config.seed += 1;
    benchmark::DoNotOptimize(skm::naive_solve(sys, config));
  }
}
BENCHMARK(BM_SolveNaive)->Arg(50)->Arg(100);

// How the sample size trades per-step cost against step quality.
void BM_BetaEffect(benchmark::State& state) {
  const skm::Index n = 100;
  const skm::ConstraintSystem sys = instance(n, n, n / 2, 42, 100.0);
  skm::SkmConfig config;
  config.beta = static_cast<int>(state.range(0));
  for (auto _ : state) {
    config.seed += 1;
    benchmark::DoNotOptimize(skm::solve(sys, config));
  }
}
BENCHMARK(BM_BetaEffect)->Arg(1)->Arg(10)->Arg(30)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
