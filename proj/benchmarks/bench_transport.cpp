#include <benchmark/benchmark.h>

#include "enda/ensemble.hpp"
#include "enda/rng.hpp"
#include "enda/transport.hpp"

namespace {

enda::Ensemble random_ensemble(enda::Rng& rng, Eigen::Index m, Eigen::Index d) {
  enda::Ensemble e;
  e.members.resize(m, d);
  for (Eigen::Index i = 0; i < e.members.size(); ++i) e.members.data()[i] = rng.normal();
  return e;
}

enda::Weights random_weights(enda::Rng& rng, Eigen::Index m) {
  Eigen::VectorXd raw(m);
  for (Eigen::Index i = 0; i < m; ++i) raw(i) = std::exp(rng.normal());
  return enda::Weights{raw / raw.sum()};
}

void BM_SolveOtExact(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  enda::Rng rng(1);
  const enda::Ensemble e = random_ensemble(rng, m, 5);
  const enda::Weights w = random_weights(rng, m);
  const enda::CostMatrix cost = enda::cost_matrix(e);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enda::solve_ot_exact(cost, w));
  }
  state.SetComplexityN(m);
}
BENCHMARK(BM_SolveOtExact)->Arg(50)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond)->Complexity();

void BM_SolveOt1d(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  enda::Rng rng(2);
  const enda::Ensemble e = random_ensemble(rng, m, 1);
  const enda::Weights w = random_weights(rng, m);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enda::solve_ot_1d(e.members.col(0), w));
  }
  state.SetComplexityN(m);
}
BENCHMARK(BM_SolveOt1d)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond)->Complexity();

}  // namespace

BENCHMARK_MAIN();
