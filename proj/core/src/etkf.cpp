#include "enda/etkf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace enda {

namespace {

// symmetric eigendecomposition with the shared symmetry / rank checks
void spd_eigen(const Eigen::MatrixXd& m, Eigen::MatrixXd& vectors,
               Eigen::VectorXd& values) {
  if (m.rows() != m.cols()) throw PreconditionError("inverse_sqrt_spd: not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw PreconditionError("inverse_sqrt_spd: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success)
    throw NumericalRankError("inverse_sqrt_spd: eigendecomposition failed");
  values = eig.eigenvalues();
  const double lambda_max = values.maxCoeff();
  if (!(lambda_max > 0.0))
    throw NumericalRankError("inverse_sqrt_spd: no positive eigenvalue");
  if (values.minCoeff() < 1e-12 * lambda_max)
    throw NumericalRankError("inverse_sqrt_spd: numerically rank deficient");
  vectors = eig.eigenvectors();
}

Eigen::VectorXd precision_weighted_innovation(const Eigen::MatrixXd& anomalies,
                                              const ObservationSet& obs,
                                              const Eigen::VectorXd& y_mean) {
  const Eigen::VectorXd delta = obs.y_obs - y_mean;
  return anomalies.transpose() * apply_noise_precision(obs.noise_cov, delta);
}

}  // namespace

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd v;
  Eigen::VectorXd lambda;
  spd_eigen(m, v, lambda);
  return v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
}

Eigen::MatrixXd EtkfTransform::apply_sqrt(const Eigen::MatrixXd& x) const {
  if (basis.cols() == 0) return x;
  return x + basis * (sqrt_scale.asDiagonal() * (basis.transpose() * x));
}

Eigen::MatrixXd EtkfTransform::dense_s() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(size, size);
  if (basis.cols() > 0)
    s += basis * sqrt_scale.asDiagonal() * basis.transpose();
  return s;
}

namespace detail {

void check_centered_anomalies(const Eigen::MatrixXd& anomalies) {
  const Eigen::Index m = anomalies.cols();
  if (m < 2) throw PreconditionError("etkf: need at least 2 members");
  const double scale = std::max(1.0, anomalies.cwiseAbs().maxCoeff());
  const double drift = (anomalies * Eigen::VectorXd::Ones(m)).cwiseAbs().maxCoeff();
  if (drift > 1e-8 * scale * static_cast<double>(m))
    throw PreconditionError("etkf: anomalies are not zero centered");
}

EtkfTransform etkf_transform_dense(const Eigen::MatrixXd& anomalies,
                                   const ObservationSet& obs,
                                   const Eigen::VectorXd& y_mean) {
  check_centered_anomalies(anomalies);
  const Eigen::Index m = anomalies.cols();
  const Eigen::MatrixXd solved = apply_noise_precision(obs.noise_cov, anomalies);
  Eigen::MatrixXd gram = anomalies.transpose() * solved / static_cast<double>(m - 1);
  gram = 0.5 * (gram + gram.transpose());
  gram.diagonal().array() += 1.0;

  Eigen::MatrixXd v;
  Eigen::VectorXd lambda;
  spd_eigen(gram, v, lambda);

  EtkfTransform t;
  t.size = m;
  t.basis = v;
  t.sqrt_scale = lambda.cwiseSqrt().cwiseInverse().array() - 1.0;
  t.inv_scale = lambda.cwiseInverse().array() - 1.0;

  const Eigen::VectorXd z =
      precision_weighted_innovation(anomalies, obs, y_mean) / static_cast<double>(m - 1);
  t.w_mean = z + t.basis * (t.inv_scale.asDiagonal() * (t.basis.transpose() * z));
  return t;
}

EtkfTransform etkf_transform_whitened(const Eigen::MatrixXd& whitened_anomalies,
                                      const Eigen::VectorXd& whitened_innovation) {
  const Eigen::Index m = whitened_anomalies.cols();
  if (m < 2) throw PreconditionError("etkf: need at least 2 members");
  const double inv_m1 = 1.0 / static_cast<double>(m - 1);

  // observation-space Gram matrix, N_y x N_y
  Eigen::MatrixXd w = whitened_anomalies * whitened_anomalies.transpose() * inv_m1;
  w = 0.5 * (w + w.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
  if (eig.info() != Eigen::Success)
    throw NumericalRankError("etkf: observation-space eigendecomposition failed");

  const Eigen::VectorXd mu = eig.eigenvalues();
  const double mu_max = std::max(mu.size() > 0 ? mu.maxCoeff() : 0.0, 0.0);
  const double floor = 1e-14 * std::max(1.0, mu_max);

  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < mu.size(); ++k)
    if (mu(k) > floor) ++rank;

  EtkfTransform t;
  t.size = m;
  t.basis.resize(m, rank);
  t.sqrt_scale.resize(rank);
  t.inv_scale.resize(rank);
  Eigen::Index out = 0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    if (mu(k) <= floor) continue;
    const double lambda = 1.0 + mu(k);
    t.basis.col(out) = whitened_anomalies.transpose() * eig.eigenvectors().col(k) /
                       std::sqrt(mu(k) / inv_m1);
    t.sqrt_scale(out) = 1.0 / std::sqrt(lambda) - 1.0;
    t.inv_scale(out) = 1.0 / lambda - 1.0;
    ++out;
  }

  const Eigen::VectorXd z = whitened_anomalies.transpose() * whitened_innovation * inv_m1;
  t.w_mean = z;
  if (rank > 0)
    t.w_mean += t.basis * (t.inv_scale.asDiagonal() * (t.basis.transpose() * z));
  return t;
}

EtkfTransform etkf_transform_lowrank(const Eigen::MatrixXd& anomalies,
                                     const ObservationSet& obs,
                                     const Eigen::VectorXd& y_mean) {
  check_centered_anomalies(anomalies);
  const Eigen::VectorXd delta = obs.y_obs - y_mean;
  if (is_diagonal_matrix(obs.noise_cov)) {
    if ((obs.noise_cov.diagonal().array() <= 0.0).any())
      throw InvalidCovarianceError("noise covariance has non-positive diagonal");
    const Eigen::VectorXd whitening =
        obs.noise_cov.diagonal().cwiseSqrt().cwiseInverse();
    return etkf_transform_whitened(whitening.asDiagonal() * anomalies,
                                   whitening.asDiagonal() * delta);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(obs.noise_cov);
  if (llt.info() != Eigen::Success)
    throw InvalidCovarianceError("noise covariance is not positive definite");
  return etkf_transform_whitened(
      llt.matrixL().solve(anomalies),
      llt.matrixL().solve(delta));
}

}  // namespace detail

EtkfTransform etkf_transform(const Eigen::MatrixXd& anomalies,
                             const ObservationSet& obs,
                             const Eigen::VectorXd& y_mean) {
  if (anomalies.rows() != obs.size() || y_mean.size() != obs.size())
    throw PreconditionError("etkf_transform: observation dimension mismatch");
  const Eigen::Index m = anomalies.cols();
  const Eigen::Index ny = anomalies.rows();
  // the M x M eigensolve wins for small ensembles; the N_y-space route keeps
  // large-M / few-observation transforms cheap
  if (m > 64 && 4 * ny < m)
    return detail::etkf_transform_lowrank(anomalies, obs, y_mean);
  return detail::etkf_transform_dense(anomalies, obs, y_mean);
}

Ensemble etkf_update(const Ensemble& e, const EtkfTransform& t) {
  if (e.member_count() != t.size)
    throw PreconditionError("etkf_update: ensemble size mismatch");
  const Eigen::VectorXd mean = ensemble_mean(e);
  const Eigen::MatrixXd anomalies = e.members.rowwise() - mean.transpose();
  const Eigen::VectorXd analysis_mean = mean + anomalies.transpose() * t.w_mean;
  Ensemble out;
  out.members = t.apply_sqrt(anomalies);
  out.members.rowwise() += analysis_mean.transpose();
  return out;
}

}  // namespace enda
