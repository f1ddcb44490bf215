#include "enda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace enda {

double rmse_logperm(const Eigen::VectorXd& mean_field, const Eigen::VectorXd& truth) {
  if (mean_field.size() != truth.size())
    throw PreconditionError("rmse: field size mismatch");
  return (mean_field - truth).norm();
}

double ensemble_variance_logperm(const Eigen::MatrixXd& fields,
                                 const Eigen::VectorXd& mean_field) {
  if (fields.rows() < 2) throw PreconditionError("variance: need at least 2 members");
  if (fields.cols() != mean_field.size())
    throw PreconditionError("variance: field size mismatch");
  const Eigen::MatrixXd centered = fields.rowwise() - mean_field.transpose();
  return centered.squaredNorm() / static_cast<double>(fields.rows() - 1);
}

double data_misfit(const Eigen::VectorXd& y_mean, const ObservationSet& obs) {
  if (y_mean.size() != obs.size()) throw PreconditionError("misfit: size mismatch");
  const Eigen::VectorXd diff = y_mean - obs.y_obs;
  const Eigen::VectorXd solved = apply_noise_precision(obs.noise_cov, diff);
  return diff.dot(solved);
}

double relative_error_5param(const Eigen::Matrix<double, 5, 1>& analysis_mean,
                             const Eigen::Matrix<double, 5, 1>& truth) {
  double total = 0.0;
  for (int i = 0; i < 5; ++i) {
    if (truth(i) == 0.0) throw DomainError("relative error: zero truth entry");
    total += std::abs(analysis_mean(i) - truth(i)) / std::abs(truth(i));
  }
  return total / 5.0;
}

SpreadStats spread_stats(const std::vector<Ensemble>& replicate_analyses) {
  if (replicate_analyses.empty())
    throw PreconditionError("spread_stats: no replicates");
  const Eigen::Index dim = replicate_analyses.front().dim();
  SpreadStats stats;
  stats.grand_mean = Eigen::VectorXd::Zero(dim);
  stats.mean_std = Eigen::VectorXd::Zero(dim);
  for (const Ensemble& e : replicate_analyses) {
    if (e.dim() != dim) throw PreconditionError("spread_stats: dimension mismatch");
    if (e.member_count() < 2)
      throw PreconditionError("spread_stats: need at least 2 members");
    const Eigen::VectorXd mean = ensemble_mean(e);
    stats.grand_mean += mean;
    const Eigen::MatrixXd centered = e.members.rowwise() - mean.transpose();
    stats.mean_std += (centered.colwise().squaredNorm() /
                       static_cast<double>(e.member_count() - 1))
                          .cwiseSqrt()
                          .transpose();
  }
  const double r = static_cast<double>(replicate_analyses.size());
  stats.grand_mean /= r;
  stats.mean_std /= r;
  return stats;
}

Eigen::VectorXd spread_error_ratio(const SpreadStats& stats, const Eigen::VectorXd& truth) {
  if (stats.grand_mean.size() != truth.size())
    throw PreconditionError("spread_error_ratio: size mismatch");
  Eigen::VectorXd ratio(truth.size());
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const double err = std::abs(stats.grand_mean(i) - truth(i));
    if (stats.mean_std(i) == 0.0)
      ratio(i) = 0.0;
    else if (err == 0.0)
      ratio(i) = std::numeric_limits<double>::infinity();
    else
      ratio(i) = stats.mean_std(i) / err;
  }
  return ratio;
}

Eigen::VectorXd pooled_member_rmse(const std::vector<Ensemble>& replicate_analyses,
                                   const Eigen::VectorXd& truth) {
  if (replicate_analyses.empty())
    throw PreconditionError("pooled_member_rmse: no replicates");
  const Eigen::Index dim = replicate_analyses.front().dim();
  if (dim != truth.size()) throw PreconditionError("pooled_member_rmse: size mismatch");
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(dim);
  Eigen::Index count = 0;
  for (const Ensemble& e : replicate_analyses) {
    if (e.dim() != dim) throw PreconditionError("pooled_member_rmse: dimension mismatch");
    sum_sq +=
        (e.members.rowwise() - truth.transpose()).colwise().squaredNorm().transpose();
    count += e.member_count();
  }
  return (sum_sq / static_cast<double>(count)).cwiseSqrt();
}

Eigen::VectorXd spread_member_rmse_ratio(const std::vector<Ensemble>& replicate_analyses,
                                         const Eigen::VectorXd& truth) {
  const SpreadStats stats = spread_stats(replicate_analyses);
  const Eigen::VectorXd rmse = pooled_member_rmse(replicate_analyses, truth);
  Eigen::VectorXd ratio(truth.size());
  for (Eigen::Index i = 0; i < truth.size(); ++i)
    ratio(i) = rmse(i) > 0.0 ? stats.mean_std(i) / rmse(i) : 0.0;
  return ratio;
}

Histogram weighted_histogram(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights,
                             int n_bins, double lo, double hi) {
  if (samples.size() < 1 || samples.size() != weights.size())
    throw PreconditionError("histogram: bad sample/weight sizes");
  if (n_bins < 1) throw PreconditionError("histogram: need at least one bin");
  if (!(hi > lo)) throw DomainError("histogram: degenerate range");

  Histogram h;
  h.edges.resize(n_bins + 1);
  const double width = (hi - lo) / n_bins;
  for (int b = 0; b <= n_bins; ++b) h.edges(b) = lo + width * b;

  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n_bins);
  double total = 0.0;
  for (Eigen::Index s = 0; s < samples.size(); ++s) {
    const double x = samples(s);
    if (x < lo || x > hi) continue;
    int b = static_cast<int>((x - lo) / width);
    b = std::clamp(b, 0, n_bins - 1);
    mass(b) += weights(s);
    total += weights(s);
  }
  if (total <= 0.0) throw DomainError("histogram: no mass inside the range");
  h.density = mass / (total * width);
  return h;
}

double kl_divergence_hist(const Eigen::VectorXd& ref_samples,
                          const Eigen::VectorXd& ref_weights,
                          const Eigen::VectorXd& samples,
                          const Eigen::VectorXd& weights, int n_bins) {
  if (ref_samples.size() < 2 || samples.size() < 2)
    throw PreconditionError("kl divergence: need at least 2 samples per side");
  const double lo = std::min(ref_samples.minCoeff(), samples.minCoeff());
  const double hi = std::max(ref_samples.maxCoeff(), samples.maxCoeff());
  if (!(hi > lo)) throw DomainError("kl divergence: degenerate sample range");

  const Histogram ref = weighted_histogram(ref_samples, ref_weights, n_bins, lo, hi);
  const Histogram cand = weighted_histogram(samples, weights, n_bins, lo, hi);
  const double width = (hi - lo) / n_bins;

  double d = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    const double p = ref.density(b);
    if (p <= 0.0) continue;
    const double q = std::max(cand.density(b), 1e-12);
    d += p * std::log(p / q) * width;
  }
  return d;
}

}  // namespace enda
