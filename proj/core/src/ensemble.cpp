#include "enda/ensemble.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace enda {

Eigen::VectorXd ensemble_mean(const Ensemble& e) {
  if (e.member_count() < 1) throw PreconditionError("ensemble_mean: empty ensemble");
  return e.members.colwise().mean();
}

Eigen::MatrixXd predicted_anomalies(const PredictedData& y) {
  if (y.member_count() < 2)
    throw PreconditionError("predicted_anomalies: need at least 2 members");
  const Eigen::VectorXd mean = y.values.colwise().mean();
  // transpose to N_y x M: column m = y_m - mean
  return (y.values.rowwise() - mean.transpose()).transpose();
}

bool is_diagonal_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

Eigen::MatrixXd apply_noise_precision(const Eigen::MatrixXd& noise_cov,
                                      const Eigen::MatrixXd& rhs) {
  if (noise_cov.rows() != noise_cov.cols() || noise_cov.rows() != rhs.rows())
    throw PreconditionError("apply_noise_precision: dimension mismatch");
  if (is_diagonal_matrix(noise_cov)) {
    if ((noise_cov.diagonal().array() <= 0.0).any())
      throw InvalidCovarianceError("noise covariance has non-positive diagonal");
    return rhs.array().colwise() / noise_cov.diagonal().array();
  }
  const double asym = (noise_cov - noise_cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, noise_cov.cwiseAbs().maxCoeff()))
    throw InvalidCovarianceError("noise covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(noise_cov);
  if (llt.info() != Eigen::Success)
    throw InvalidCovarianceError("noise covariance is not positive definite");
  return llt.solve(rhs);
}

void validate_observation_set(const ObservationSet& obs) {
  if (obs.y_obs.size() != obs.noise_cov.rows())
    throw PreconditionError("observation set: covariance size mismatch");
  if (obs.locations.rows() != 0 && obs.locations.rows() != obs.y_obs.size())
    throw PreconditionError("observation set: location count mismatch");
  // SPD check via the same path used for solves
  apply_noise_precision(obs.noise_cov, Eigen::MatrixXd::Identity(obs.size(), obs.size()));
  for (Eigen::Index l = 0; l < obs.locations.rows(); ++l) {
    const double x = obs.locations(l, 0), y = obs.locations(l, 1);
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
      throw PreconditionError("observation location outside the unit square");
  }
}

void validate_weights(const Weights& w, Eigen::Index expected_size) {
  if (w.size() != expected_size) throw PreconditionError("weights: size mismatch");
  if ((w.values.array() < 0.0).any())
    throw PreconditionError("weights: negative entry");
  if (std::abs(w.values.sum() - 1.0) > 1e-9)
    throw PreconditionError("weights: entries do not sum to 1");
}

Eigen::VectorXd quadratic_misfits(const PredictedData& y, const ObservationSet& obs) {
  if (y.obs_dim() != obs.size())
    throw PreconditionError("quadratic_misfits: observation dimension mismatch");
  // residual columns: r_m = y_m - y_obs, stored N_y x M
  const Eigen::MatrixXd resid =
      (y.values.rowwise() - obs.y_obs.transpose()).transpose();
  const Eigen::MatrixXd solved = apply_noise_precision(obs.noise_cov, resid);
  return (resid.array() * solved.array()).colwise().sum().transpose();
}

Weights weights_from_quadratic_misfits(const Eigen::VectorXd& q) {
  if (q.size() < 1) throw PreconditionError("weights: empty misfit vector");
  if (!q.allFinite()) throw PreconditionError("weights: non-finite misfit");
  Eigen::VectorXd logw = -0.5 * q;
  logw.array() -= logw.maxCoeff();
  Eigen::VectorXd w = logw.array().exp();
  w /= w.sum();
  return Weights{std::move(w)};
}

Weights likelihood_weights(const PredictedData& y, const ObservationSet& obs) {
  return weights_from_quadratic_misfits(quadratic_misfits(y, obs));
}

Eigen::VectorXd is_posterior_mean(const Ensemble& e, const Weights& w) {
  if (e.member_count() != w.size())
    throw PreconditionError("is_posterior_mean: size mismatch");
  return e.members.transpose() * w.values;
}

double effective_sample_size(const Weights& w) {
  return 1.0 / w.values.squaredNorm();
}

}  // namespace enda
