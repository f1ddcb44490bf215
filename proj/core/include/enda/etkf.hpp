#pragma once

#include <Eigen/Dense>

#include "enda/ensemble.hpp"

namespace enda {

// Ensemble-space square-root Kalman analysis.
//
// With predicted-data anomalies A (N_y x M, columns summing to zero),
//   S      = [I + A^T R^-1 A / (M-1)]^-1/2          (symmetric root)
//   w_mean = S^2 A^T R^-1 (y_obs - y_mean) / (M-1)
// and the analysis members are u_m^a = u_mean + U (w_mean + S_col_m), where U
// holds the member anomalies. S - I has rank at most min(M, N_y), so the
// transform is kept factored as S = I + V diag(s) V^T with orthonormal V; the
// dense matrix is materialized only on request. Both the small-M eigensolve
// path and the observation-space path produce this same representation.
struct EtkfTransform {
  Eigen::Index size = 0;        // M
  Eigen::MatrixXd basis;        // M x r, orthonormal columns
  Eigen::VectorXd sqrt_scale;   // r entries: lambda^-1/2 - 1
  Eigen::VectorXd inv_scale;    // r entries: lambda^-1   - 1
  Eigen::VectorXd w_mean;       // M mean-update weights

  // S * x for an M x k block
  Eigen::MatrixXd apply_sqrt(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd dense_s() const;
};

// V diag(eig^-1/2) V^T via symmetric eigendecomposition. Input must be
// symmetric within 1e-10 (relative to its largest entry). Eigenvalues below
// 1e-12 * lambda_max raise NumericalRankError instead of being regularized.
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& m);

EtkfTransform etkf_transform(const Eigen::MatrixXd& anomalies,
                             const ObservationSet& obs,
                             const Eigen::VectorXd& y_mean);

Ensemble etkf_update(const Ensemble& e, const EtkfTransform& t);

namespace detail {

// The two internal routes; etkf_transform picks by problem shape. Exposed so
// tests can assert they agree.
EtkfTransform etkf_transform_dense(const Eigen::MatrixXd& anomalies,
                                   const ObservationSet& obs,
                                   const Eigen::VectorXd& y_mean);
EtkfTransform etkf_transform_lowrank(const Eigen::MatrixXd& anomalies,
                                     const ObservationSet& obs,
                                     const Eigen::VectorXd& y_mean);

// Transform from whitened anomalies F = R^-1/2 A and whitened innovation;
// shared with the localized filter, where the whitening carries the taper.
EtkfTransform etkf_transform_whitened(const Eigen::MatrixXd& whitened_anomalies,
                                      const Eigen::VectorXd& whitened_innovation);

void check_centered_anomalies(const Eigen::MatrixXd& anomalies);

}  // namespace detail

}  // namespace enda
