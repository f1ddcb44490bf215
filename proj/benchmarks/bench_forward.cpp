#include <benchmark/benchmark.h>

#include <cmath>

#include "enda/etkf.hpp"
#include "enda/forward_models.hpp"
#include "enda/priors_fields.hpp"
#include "enda/rng.hpp"

namespace {

void BM_DarcySolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const enda::GridSpec g = enda::GridSpec::unit(n);
  enda::Rng rng(3);
  enda::PermeabilityField k;
  k.k.resize(g.cell_count());
  for (Eigen::Index i = 0; i < k.k.size(); ++i) k.k(i) = std::exp(rng.normal());
  for (auto _ : state) {
    benchmark::DoNotOptimize(enda::solve_pressure(k, g));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_DarcySolve)->Arg(10)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond)->Complexity();

void BM_KlBasis(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd c = enda::exp_covariance(enda::GridSpec::unit(n), 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enda::kl_basis(c));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_KlBasis)->Arg(10)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond)->Complexity();

void BM_EtkfTransform(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  const Eigen::Index ny = 16;
  enda::Rng rng(4);
  Eigen::MatrixXd y(ny, m);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
  const Eigen::MatrixXd anomalies = y.colwise() - y.rowwise().mean().eval();
  enda::ObservationSet obs;
  obs.y_obs = Eigen::VectorXd::Zero(ny);
  obs.noise_cov = 0.0081 * Eigen::MatrixXd::Identity(ny, ny);
  obs.locations.resize(0, 2);
  const Eigen::VectorXd y_mean = Eigen::VectorXd::Zero(ny);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enda::etkf_transform(anomalies, obs, y_mean));
  }
  state.SetComplexityN(m);
}
BENCHMARK(BM_EtkfTransform)->Arg(100)->Arg(500)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond)->Complexity();

}  // namespace

BENCHMARK_MAIN();
