#pragma once

#include <Eigen/Dense>

#include "enda/errors.hpp"

namespace enda {

// Ensemble of M parameter vectors, stored one member per row (M x d). Every
// filter in the library consumes and produces this layout.
struct Ensemble {
  Eigen::MatrixXd members;

  Eigen::Index member_count() const { return members.rows(); }
  Eigen::Index dim() const { return members.cols(); }
};

// Normalized importance weights: entrywise >= 0, sum 1 (within 1e-12).
struct Weights {
  Eigen::VectorXd values;

  Eigen::Index size() const { return values.size(); }
};

// Observed data, its error covariance and the observation locations in the
// closed unit square. The covariance is diagonal in all shipped experiments;
// a full SPD matrix is accepted and handled by Cholesky solves.
struct ObservationSet {
  Eigen::VectorXd y_obs;
  Eigen::MatrixXd noise_cov;
  Eigen::Matrix<double, Eigen::Dynamic, 2> locations;

  Eigen::Index size() const { return y_obs.size(); }
};

// Predicted data, row m = h(u_m).
struct PredictedData {
  Eigen::MatrixXd values;

  Eigen::Index member_count() const { return values.rows(); }
  Eigen::Index obs_dim() const { return values.cols(); }
};

Eigen::VectorXd ensemble_mean(const Ensemble& e);

// Column m = y_m - mean over members; columns sum to the zero vector.
Eigen::MatrixXd predicted_anomalies(const PredictedData& y);

// w_m proportional to exp(-1/2 (y_m - y_obs)^T R^-1 (y_m - y_obs)), normalized.
// Computed in log space with max subtraction.
Weights likelihood_weights(const PredictedData& y, const ObservationSet& obs);

Eigen::VectorXd is_posterior_mean(const Ensemble& e, const Weights& w);

// 1 / sum w_m^2; M for uniform weights, 1 for a degenerate weight vector.
double effective_sample_size(const Weights& w);

// Normalized weights from precomputed quadratic misfits q_m (log-space path
// shared with the localized filters): w_m proportional to exp(-q_m / 2).
Weights weights_from_quadratic_misfits(const Eigen::VectorXd& q);

// Quadratic misfits q_m = (y_m - y_obs)^T R^-1 (y_m - y_obs).
Eigen::VectorXd quadratic_misfits(const PredictedData& y, const ObservationSet& obs);

// R^-1 * rhs with a diagonal fast path, Cholesky solve otherwise.
// Throws InvalidCovarianceError if R is not symmetric positive definite.
Eigen::MatrixXd apply_noise_precision(const Eigen::MatrixXd& noise_cov,
                                      const Eigen::MatrixXd& rhs);

bool is_diagonal_matrix(const Eigen::MatrixXd& m);

// Checks R symmetric positive definite and locations inside [0,1]^2.
void validate_observation_set(const ObservationSet& obs);

void validate_weights(const Weights& w, Eigen::Index expected_size);

}  // namespace enda
