#include <doctest.h>

#include <cmath>

#include "enda/etkf.hpp"
#include "enda/rng.hpp"
#include "support/kalman_oracle.hpp"

using namespace enda;

namespace {

ObservationSet scalar_obs(double y, double variance) {
  ObservationSet obs;
  obs.y_obs = Eigen::VectorXd::Constant(1, y);
  obs.noise_cov = Eigen::MatrixXd::Constant(1, 1, variance);
  obs.locations.resize(0, 2);
  return obs;
}

}  // namespace

TEST_CASE("inverse_sqrt_spd") {
  SUBCASE("identity") {
    const Eigen::MatrixXd r = inverse_sqrt_spd(Eigen::MatrixXd::Identity(3, 3));
    CHECK((r - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("diagonal") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d.diagonal() << 4.0, 9.0;
    const Eigen::MatrixXd r = inverse_sqrt_spd(d);
    CHECK(r(0, 0) == doctest::Approx(0.5));
    CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(std::abs(r(0, 1)) <= 1e-14);
  }
  SUBCASE("hand 2x2 eigendecomposition") {
    Eigen::MatrixXd m(2, 2);
    m << 1.5, -0.5, -0.5, 1.5;
    const Eigen::MatrixXd r = inverse_sqrt_spd(m);
    const double on = 0.5 * (1.0 + 1.0 / std::sqrt(2.0));
    const double off = 0.5 * (1.0 - 1.0 / std::sqrt(2.0));
    CHECK(r(0, 0) == doctest::Approx(on));
    CHECK(r(1, 1) == doctest::Approx(on));
    CHECK(r(0, 1) == doctest::Approx(off));
    // defining identity: r * r * m = I
    CHECK((r * r * m - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("rank-deficient input is rejected") {
    Eigen::MatrixXd singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(inverse_sqrt_spd(singular), NumericalRankError);
  }
  SUBCASE("asymmetric input is rejected") {
    Eigen::MatrixXd skew(2, 2);
    skew << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(inverse_sqrt_spd(skew), PreconditionError);
  }
}

TEST_CASE("etkf_transform") {
  SUBCASE("zero anomalies give the identity transform") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 4);
    const EtkfTransform t =
        etkf_transform(a, scalar_obs(3.0, 2.0), Eigen::VectorXd::Zero(1));
    CHECK((t.dense_s() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(t.w_mean.cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("two-member scalar case") {
    Eigen::MatrixXd a(1, 2);
    a << -1.0, 1.0;
    const EtkfTransform t =
        etkf_transform(a, scalar_obs(3.0, 2.0), Eigen::VectorXd::Constant(1, 1.0));
    CHECK(t.w_mean(0) == doctest::Approx(-0.5));
    CHECK(t.w_mean(1) == doctest::Approx(0.5));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t.dense_s());
    CHECK(eig.eigenvalues()(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(eig.eigenvalues()(1) == doctest::Approx(1.0));
  }
  SUBCASE("uninformative observations leave the ensemble alone") {
    Eigen::MatrixXd a(1, 2);
    a << -1.0, 1.0;
    const EtkfTransform t =
        etkf_transform(a, scalar_obs(3.0, 2.0e6), Eigen::VectorXd::Constant(1, 1.0));
    CHECK((t.dense_s() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(t.w_mean.cwiseAbs().maxCoeff() <= 1e-4);
  }
  SUBCASE("uncentered anomalies are rejected") {
    Eigen::MatrixXd a(1, 3);
    a << 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(etkf_transform(a, scalar_obs(0.0, 1.0), Eigen::VectorXd::Zero(1)),
                    PreconditionError);
  }
}

TEST_CASE("S has row sums one when anomalies are centered") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 5 + trial;
    Eigen::MatrixXd y(2, m);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
    Eigen::MatrixXd a = y.colwise() - y.rowwise().mean().eval();
    ObservationSet obs;
    obs.y_obs = Eigen::VectorXd::Zero(2);
    obs.noise_cov = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    obs.locations.resize(0, 2);
    const EtkfTransform t = etkf_transform(a, obs, Eigen::VectorXd::Zero(2));
    const Eigen::VectorXd row_sums = t.dense_s() * Eigen::VectorXd::Ones(m);
    CHECK((row_sums.array() - 1.0).abs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("dense and observation-space transform routes agree") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index m = 80;
    Eigen::MatrixXd y(3, m);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
    const Eigen::MatrixXd a = y.colwise() - y.rowwise().mean().eval();
    ObservationSet obs;
    obs.y_obs.resize(3);
    obs.y_obs << 0.3, -0.1, 0.5;
    obs.noise_cov = Eigen::MatrixXd::Identity(3, 3);
    obs.noise_cov.diagonal() << 0.5, 1.0, 2.0;
    obs.locations.resize(0, 2);
    const Eigen::VectorXd y_mean = Eigen::VectorXd::Zero(3);

    const EtkfTransform dense = detail::etkf_transform_dense(a, obs, y_mean);
    const EtkfTransform lowrank = detail::etkf_transform_lowrank(a, obs, y_mean);
    CHECK((dense.dense_s() - lowrank.dense_s()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((dense.w_mean - lowrank.w_mean).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("etkf_update") {
  SUBCASE("identity transform returns the input") {
    Ensemble e;
    e.members.resize(3, 2);
    e.members << 0.0, 1.0, 2.0, -1.0, 4.0, 0.5;
    EtkfTransform t;
    t.size = 3;
    t.basis.resize(3, 0);
    t.sqrt_scale.resize(0);
    t.inv_scale.resize(0);
    t.w_mean = Eigen::VectorXd::Zero(3);
    const Ensemble out = etkf_update(e, t);
    CHECK((out.members - e.members).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("two-member scalar analysis matches the exact Kalman update") {
    Ensemble e;
    e.members.resize(2, 1);
    e.members << 0.0, 2.0;
    Eigen::MatrixXd a(1, 2);
    a << -1.0, 1.0;
    const EtkfTransform t =
        etkf_transform(a, scalar_obs(3.0, 2.0), Eigen::VectorXd::Constant(1, 1.0));
    const Ensemble out = etkf_update(e, t);
    CHECK(out.members.col(0).mean() == doctest::Approx(2.0));
    CHECK(out.members(0, 0) == doctest::Approx(2.0 - 1.0 / std::sqrt(2.0)));
    CHECK(out.members(1, 0) == doctest::Approx(2.0 + 1.0 / std::sqrt(2.0)));
  }
  SUBCASE("analysis anomalies stay zero centered") {
    Rng rng(5);
    Ensemble e;
    e.members.resize(6, 3);
    for (Eigen::Index i = 0; i < e.members.size(); ++i)
      e.members.data()[i] = rng.normal();
    Eigen::MatrixXd y(2, 6);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
    const Eigen::MatrixXd a = y.colwise() - y.rowwise().mean().eval();
    ObservationSet obs;
    obs.y_obs.resize(2);
    obs.y_obs << 1.0, -2.0;
    obs.noise_cov = Eigen::MatrixXd::Identity(2, 2);
    obs.locations.resize(0, 2);
    const EtkfTransform t = etkf_transform(a, obs, Eigen::VectorXd::Zero(2));
    const Ensemble out = etkf_update(e, t);
    const Eigen::VectorXd mean = ensemble_mean(out);
    const Eigen::MatrixXd anomalies = out.members.rowwise() - mean.transpose();
    CHECK((anomalies.colwise().sum()).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("update preserves the affine subspace (shift equivariance)") {
    Rng rng(9);
    Ensemble e;
    e.members.resize(5, 2);
    for (Eigen::Index i = 0; i < e.members.size(); ++i)
      e.members.data()[i] = rng.normal();
    Eigen::MatrixXd y(1, 5);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
    const Eigen::MatrixXd a = y.colwise() - y.rowwise().mean().eval();
    const EtkfTransform t =
        etkf_transform(a, scalar_obs(0.7, 0.3), Eigen::VectorXd::Zero(1));

    const Ensemble out = etkf_update(e, t);
    Ensemble shifted = e;
    shifted.members.array() += 19.5;
    const Ensemble out_shifted = etkf_update(shifted, t);
    CHECK((out_shifted.members - out.members).cwiseAbs().maxCoeff() ==
          doctest::Approx(19.5).epsilon(1e-10));
  }
}

TEST_CASE("analysis moments match the closed-form Kalman update") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.next_u64() % 3);
    const Eigen::Index ny = 1 + static_cast<Eigen::Index>(rng.next_u64() % 3);

    Eigen::VectorXd mean(d);
    for (Eigen::Index i = 0; i < d; ++i) mean(i) = rng.normal();
    const Eigen::MatrixXd prior_cov = testing::random_spd(rng, d);
    Eigen::MatrixXd h(ny, d);
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.normal();
    const Eigen::MatrixXd r = testing::random_spd(rng, ny, 0.5);
    Eigen::VectorXd y(ny);
    for (Eigen::Index i = 0; i < ny; ++i) y(i) = rng.normal();

    const Ensemble prior = testing::ensemble_with_moments(mean, prior_cov);
    PredictedData predicted;
    predicted.values = prior.members * h.transpose();
    ObservationSet obs;
    obs.y_obs = y;
    obs.noise_cov = r;
    obs.locations.resize(0, 2);

    const Eigen::VectorXd y_mean = predicted.values.colwise().mean();
    const EtkfTransform t = etkf_transform(predicted_anomalies(predicted), obs, y_mean);
    const Ensemble analysis = etkf_update(prior, t);

    const testing::KalmanPosterior exact =
        testing::kalman_update(mean, prior_cov, h, r, y);
    const Eigen::VectorXd analysis_mean = ensemble_mean(analysis);
    const Eigen::MatrixXd centered =
        analysis.members.rowwise() - analysis_mean.transpose();
    const Eigen::MatrixXd analysis_cov =
        centered.transpose() * centered / static_cast<double>(prior.member_count() - 1);

    const double mean_scale = std::max(1.0, exact.mean.norm());
    const double cov_scale = std::max(1.0, exact.cov.norm());
    CHECK((analysis_mean - exact.mean).norm() <= 1e-8 * mean_scale);
    CHECK((analysis_cov - exact.cov).norm() <= 1e-8 * cov_scale);
  }
}
