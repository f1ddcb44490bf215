#pragma once

#include <Eigen/Dense>
#include <vector>

#include "enda/ensemble.hpp"

namespace enda {

// Unnormalized Euclidean norm |mean - truth| over the grid (no 1/n^2 factor).
double rmse_logperm(const Eigen::VectorXd& mean_field, const Eigen::VectorXd& truth);

// (1/(M-1)) sum_m |field_m - mean|^2, fields one per row.
double ensemble_variance_logperm(const Eigen::MatrixXd& fields,
                                 const Eigen::VectorXd& mean_field);

// (y_mean - y_obs)^T R^-1 (y_mean - y_obs)
double data_misfit(const Eigen::VectorXd& y_mean, const ObservationSet& obs);

// (1/5) sum_i |mean_i - truth_i| / |truth_i| in the untransformed coordinates
// (a, b, c, log k1, log k2).
double relative_error_5param(const Eigen::Matrix<double, 5, 1>& analysis_mean,
                             const Eigen::Matrix<double, 5, 1>& truth);

// Replicate aggregation: grand mean of the per-replicate ensemble means and
// the mean of the per-replicate sample standard deviations (M-1 denominator).
struct SpreadStats {
  Eigen::VectorXd grand_mean;
  Eigen::VectorXd mean_std;
};

SpreadStats spread_stats(const std::vector<Ensemble>& replicate_analyses);

// Per parameter: mean_std / |grand_mean - truth|; 0 when the spread vanishes,
// +inf sentinel when the error vanishes with nonzero spread. With few
// replicates sharing one observation-noise draw, the denominator can be
// arbitrarily small by luck; prefer the member-RMSE variant below for a
// stable calibration diagnostic.
Eigen::VectorXd spread_error_ratio(const SpreadStats& stats, const Eigen::VectorXd& truth);

// Per parameter, pooled over replicates and members:
// sqrt(mean over (r, m) of (u_imr - truth_i)^2) = sqrt(spread^2 + bias^2).
Eigen::VectorXd pooled_member_rmse(const std::vector<Ensemble>& replicate_analyses,
                                   const Eigen::VectorXd& truth);

// mean_std / pooled member RMSE: close to 1 for a calibrated ensemble,
// markedly below 1 when the ensemble is underdispersive. Never exceeds
// ~sqrt(M/(M-1)) by construction.
Eigen::VectorXd spread_member_rmse_ratio(const std::vector<Ensemble>& replicate_analyses,
                                         const Eigen::VectorXd& truth);

struct Histogram {
  Eigen::VectorXd edges;    // n_bins + 1
  Eigen::VectorXd density;  // n_bins, integrates to 1
};

Histogram weighted_histogram(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights,
                             int n_bins, double lo, double hi);

// D_KL(reference || candidate) over a common 20-bin equal-width grid spanning
// the union of the two sample ranges: sum of pi_ref log(pi_ref / pi) * width,
// skipping bins with pi_ref = 0 and flooring pi at 1e-12 elsewhere.
double kl_divergence_hist(const Eigen::VectorXd& ref_samples,
                          const Eigen::VectorXd& ref_weights,
                          const Eigen::VectorXd& samples,
                          const Eigen::VectorXd& weights, int n_bins = 20);

}  // namespace enda
