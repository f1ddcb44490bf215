#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "enda/ensemble.hpp"
#include "enda/forward_models.hpp"

namespace enda {

// log(x / (1-x)); DomainError outside (0,1)
double logit(double x);
double inverse_logit(double y);

// Two-layer permeability: a and b are the bottom-layer thicknesses at x = 0
// and x = 1, c shifts the right half of the interface down (c > 0) or up
// (c < 0) across the fault fixed at x = 0.5.
struct LayeredParams {
  double a = 0.5;
  double b = 0.5;
  double c = 0.0;
  double log_k1 = 0.0;
  double log_k2 = 0.0;

  // assimilation coordinates (logit a, logit b, c, log k1, log k2)
  Eigen::Matrix<double, 5, 1> transformed() const;
  static LayeredParams from_transformed(const Eigen::Matrix<double, 5, 1>& u);
};

// (a, b, c, k1, k2) = (0.6, 0.3, -0.15, 12, 5)
LayeredParams layered_truth();

// Uniform draws a, b ~ U[0,1], c ~ U[-0.5,0.5], k1 ~ U[10,15], k2 ~ U[4,7],
// returned in the transformed coordinates.
Ensemble sample_five_param_prior(std::uint64_t seed, Eigen::Index member_count);

// Cell gets k1 when its center lies below the (clamped) interface, k2 above.
// swap_layers exchanges the two values.
PermeabilityField layered_permeability(const LayeredParams& p, const GridSpec& g,
                                       bool swap_layers = false);

// C_ij = exp(-3 |x_i - x_j| / range), unit diagonal.
Eigen::MatrixXd exp_covariance(const GridSpec& g, double range);

// Eigendecomposition of the field covariance: eigenvalues descending and
// clamped at zero, matching orthonormal eigenvectors, plus the constant field
// mean log(5). truncation bounds the modes used by kl_to_logperm.
struct KLBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  double mean_log_k = 0.0;
  Eigen::Index truncation = 0;

  Eigen::Index dim() const { return eigenvalues.size(); }
};

KLBasis kl_basis(const Eigen::MatrixXd& covariance);

// mean + sum_{i < truncation} sqrt(lambda_i) nu_i z_i. A non-positive
// truncation_override selects the basis truncation.
Eigen::VectorXd kl_to_logperm(const Eigen::VectorXd& modes, const KLBasis& basis,
                              Eigen::Index truncation_override = -1);

struct ModeProjection {
  Eigen::VectorXd modes;
  double residual_norm = 0.0;  // part of the field outside the inverted range
};

// z_i = nu_i^T (field - mean) / sqrt(lambda_i) for eigenvalues above the
// floor 1e-12 * lambda_1, zero otherwise. Left inverse of kl_to_logperm on
// its range.
ModeProjection logperm_to_modes(const Eigen::VectorXd& field, const KLBasis& basis);

// M iid standard-normal mode vectors; kl_to_logperm maps each row to a draw
// from N(mean, C).
Ensemble sample_grf_prior(const KLBasis& basis, std::uint64_t seed,
                          Eigen::Index member_count);

// Snapshot persistence so large eigendecompositions are computed once per
// covariance configuration.
void save_kl_basis(const std::string& path, const KLBasis& basis);
KLBasis load_kl_basis(const std::string& path);

}  // namespace enda
