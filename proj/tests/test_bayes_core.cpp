#include <doctest.h>

#include <cmath>

#include "enda/ensemble.hpp"
#include "enda/rng.hpp"

using namespace enda;

namespace {

Ensemble make_ensemble(std::initializer_list<std::initializer_list<double>> rows) {
  Ensemble e;
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows.begin()->size());
  e.members.resize(m, d);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (const double v : row) e.members(i, j++) = v;
    ++i;
  }
  return e;
}

ObservationSet scalar_obs(double y, double variance) {
  ObservationSet obs;
  obs.y_obs = Eigen::VectorXd::Constant(1, y);
  obs.noise_cov = Eigen::MatrixXd::Constant(1, 1, variance);
  obs.locations.resize(0, 2);
  return obs;
}

}  // namespace

TEST_CASE("ensemble_mean") {
  CHECK(ensemble_mean(make_ensemble({{0.0}, {2.0}}))(0) == doctest::Approx(1.0));
  const Eigen::VectorXd single = ensemble_mean(make_ensemble({{1.0, 1.0}}));
  CHECK(single(0) == doctest::Approx(1.0));
  CHECK(single(1) == doctest::Approx(1.0));
  const Eigen::VectorXd mean =
      ensemble_mean(make_ensemble({{0.0, 0.0}, {1.0, 2.0}, {2.0, 4.0}}));
  CHECK(mean(0) == doctest::Approx(1.0));
  CHECK(mean(1) == doctest::Approx(2.0));
}

TEST_CASE("predicted_anomalies") {
  PredictedData same;
  same.values = Eigen::MatrixXd::Constant(4, 3, 2.5);
  CHECK(predicted_anomalies(same).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  PredictedData two;
  two.values.resize(2, 1);
  two.values << 0.0, 2.0;
  const Eigen::MatrixXd a2 = predicted_anomalies(two);
  CHECK(a2(0, 0) == doctest::Approx(-1.0));
  CHECK(a2(0, 1) == doctest::Approx(1.0));

  PredictedData three;
  three.values.resize(3, 1);
  three.values << 1.0, 2.0, 6.0;
  const Eigen::MatrixXd a3 = predicted_anomalies(three);
  CHECK(a3(0, 0) == doctest::Approx(-2.0));
  CHECK(a3(0, 1) == doctest::Approx(-1.0));
  CHECK(a3(0, 2) == doctest::Approx(3.0));
}

TEST_CASE("predicted_anomalies columns sum to zero on random data") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    PredictedData y;
    y.values.resize(5, 4);
    for (Eigen::Index i = 0; i < y.values.size(); ++i)
      y.values.data()[i] = 100.0 * rng.normal();
    const Eigen::MatrixXd a = predicted_anomalies(y);
    const double scale = std::max(1.0, y.values.cwiseAbs().maxCoeff());
    CHECK((a * Eigen::VectorXd::Ones(5)).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("likelihood_weights examples") {
  SUBCASE("identical predictions give uniform weights") {
    PredictedData y;
    y.values = Eigen::MatrixXd::Constant(5, 1, 3.0);
    const Weights w = likelihood_weights(y, scalar_obs(0.0, 1.0));
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(w.values(i) == doctest::Approx(0.2));
  }
  SUBCASE("direct evaluation") {
    PredictedData y;
    y.values.resize(2, 1);
    y.values << 0.0, 2.0;
    const Weights w = likelihood_weights(y, scalar_obs(0.0, 1.0));
    CHECK(w.values(0) == doctest::Approx(0.880797).epsilon(1e-6));
    CHECK(w.values(1) == doctest::Approx(0.119203).epsilon(1e-6));
  }
  SUBCASE("degenerate noise limit") {
    PredictedData y;
    y.values.resize(2, 1);
    y.values << 1.0, 1.5;
    const Weights w = likelihood_weights(y, scalar_obs(1.0, 1e-8));
    CHECK(w.values(0) == doctest::Approx(1.0));
    CHECK(w.values(1) == doctest::Approx(0.0));
  }
  SUBCASE("non-SPD covariance is rejected") {
    PredictedData y;
    y.values.resize(2, 2);
    y.values << 0.0, 1.0, 1.0, 0.0;
    ObservationSet obs;
    obs.y_obs = Eigen::VectorXd::Zero(2);
    obs.noise_cov.resize(2, 2);
    obs.noise_cov << 1.0, 2.0, 2.0, 1.0;  // indefinite
    obs.locations.resize(0, 2);
    CHECK_THROWS_AS(likelihood_weights(y, obs), InvalidCovarianceError);
  }
}

TEST_CASE("likelihood_weights is invariant under a common misfit shift") {
  // symmetric predictions around the observation: moving the observation so
  // every squared misfit grows by the same amount must not change the weights
  PredictedData y;
  y.values.resize(2, 1);
  y.values << -1.0, 1.0;
  const Weights base = likelihood_weights(y, scalar_obs(0.0, 1.0));
  CHECK(base.values(0) == doctest::Approx(0.5));

  PredictedData shifted;
  shifted.values.resize(2, 2);
  shifted.values << -1.0, 5.0, 1.0, 5.0;  // second column identical
  ObservationSet obs;
  obs.y_obs.resize(2);
  obs.y_obs << 0.0, 0.0;
  obs.noise_cov = Eigen::MatrixXd::Identity(2, 2);
  obs.locations.resize(0, 2);
  const Weights w = likelihood_weights(shifted, obs);
  CHECK(w.values(0) == doctest::Approx(base.values(0)));
  CHECK(w.values(1) == doctest::Approx(base.values(1)));
}

TEST_CASE("weights sum to one and stay non-negative for extreme misfits") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd q(6);
    for (Eigen::Index i = 0; i < q.size(); ++i)
      q(i) = std::abs(rng.normal()) * std::pow(10.0, rng.uniform(0.0, 6.0));
    const Weights w = weights_from_quadratic_misfits(q);
    CHECK((w.values.array() >= 0.0).all());
    CHECK(std::abs(w.values.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("is_posterior_mean") {
  const Ensemble e = make_ensemble({{0.0}, {1.0}, {2.0}});
  SUBCASE("uniform weights reduce to the ensemble mean") {
    const Weights w{Eigen::VectorXd::Constant(3, 1.0 / 3.0)};
    CHECK(std::abs(is_posterior_mean(e, w)(0) - ensemble_mean(e)(0)) <= 1e-14);
  }
  SUBCASE("degenerate weight picks one member") {
    Weights w{Eigen::VectorXd::Zero(3)};
    w.values(0) = 1.0;
    CHECK(is_posterior_mean(e, w)(0) == doctest::Approx(0.0));
  }
  SUBCASE("direct arithmetic") {
    Weights w{Eigen::VectorXd(3)};
    w.values << 0.5, 0.25, 0.25;
    CHECK(is_posterior_mean(e, w)(0) == doctest::Approx(0.75));
  }
}

TEST_CASE("effective_sample_size") {
  CHECK(effective_sample_size(Weights{Eigen::VectorXd::Constant(10, 0.1)}) ==
        doctest::Approx(10.0));
  Weights degenerate{Eigen::VectorXd::Zero(4)};
  degenerate.values(0) = 1.0;
  CHECK(effective_sample_size(degenerate) == doctest::Approx(1.0));
  Weights w{Eigen::VectorXd(3)};
  w.values << 0.5, 0.25, 0.25;
  CHECK(effective_sample_size(w) == doctest::Approx(1.0 / 0.375));
}
