#include "enda/localization.hpp"

#include <cmath>

#include "enda/etkf.hpp"
#include "enda/etpf.hpp"
#include "enda/parallel.hpp"
#include "enda/transport.hpp"

namespace enda {

double gaspari_cohn(double r) {
  if (r < 0.0) throw DomainError("gaspari_cohn: negative distance");
  if (r >= 2.0) return 0.0;
  if (r <= 1.0) {
    const double r2 = r * r;
    return 1.0 - (5.0 / 3.0) * r2 + (5.0 / 8.0) * r2 * r + 0.5 * r2 * r2 -
           0.25 * r2 * r2 * r;
  }
  const double r2 = r * r;
  return -(2.0 / 3.0) / r + 4.0 - 5.0 * r + (5.0 / 3.0) * r2 +
         (5.0 / 8.0) * r2 * r - 0.5 * r2 * r2 + (1.0 / 12.0) * r2 * r2 * r;
}

Eigen::VectorXd taper_diagonal(const Eigen::Vector2d& x, const ObservationSet& obs,
                               const LocalizationConfig& cfg) {
  if (!(cfg.radius > 0.0)) throw PreconditionError("localization: radius must be positive");
  Eigen::VectorXd taper(obs.locations.rows());
  for (Eigen::Index l = 0; l < obs.locations.rows(); ++l) {
    const Eigen::Vector2d r = obs.locations.row(l);
    taper(l) = gaspari_cohn((x - r).norm() / cfg.radius);
  }
  return taper;
}

namespace {

Eigen::VectorXd diagonal_precision(const ObservationSet& obs) {
  if (!is_diagonal_matrix(obs.noise_cov))
    throw PreconditionError("localized updates require a diagonal noise covariance");
  if ((obs.noise_cov.diagonal().array() <= 0.0).any())
    throw InvalidCovarianceError("noise covariance has non-positive diagonal");
  return obs.noise_cov.diagonal().cwiseInverse();
}

void check_grid_indexed(const Ensemble& e, const GridSpec& g) {
  if (e.dim() != g.cell_count())
    throw PreconditionError("localized updates require grid-indexed parameters");
}

}  // namespace

Ensemble letkf_update(const Ensemble& e, const Eigen::MatrixXd& anomalies,
                      const ObservationSet& obs, const Eigen::VectorXd& y_mean,
                      const GridSpec& g, const LocalizationConfig& cfg) {
  check_grid_indexed(e, g);
  if (anomalies.rows() != obs.size() || y_mean.size() != obs.size())
    throw PreconditionError("letkf: observation dimension mismatch");
  detail::check_centered_anomalies(anomalies);

  const Eigen::VectorXd precision = diagonal_precision(obs);
  const Eigen::VectorXd delta = obs.y_obs - y_mean;
  const Eigen::VectorXd member_mean = ensemble_mean(e);

  Ensemble out;
  out.members = e.members;
  parallel_for(static_cast<std::size_t>(g.cell_count()), [&](std::size_t cell) {
    const Eigen::Index i = static_cast<Eigen::Index>(cell);
    const Eigen::VectorXd taper = taper_diagonal(g.center(i), obs, cfg);
    if (taper.maxCoeff() <= 0.0) return;  // no observation in range

    const Eigen::VectorXd whitening = (taper.array() * precision.array()).sqrt();
    const EtkfTransform t = detail::etkf_transform_whitened(
        whitening.asDiagonal() * anomalies, whitening.cwiseProduct(delta));

    const Eigen::VectorXd coord =
        e.members.col(i).array() - member_mean(i);  // member anomalies at X_i
    const double mean_update = member_mean(i) + coord.dot(t.w_mean);
    out.members.col(i) = t.apply_sqrt(coord).array() + mean_update;
  });
  return out;
}

Ensemble letpf_update(const Ensemble& e, const PredictedData& y,
                      const ObservationSet& obs, const GridSpec& g,
                      const LocalizationConfig& cfg) {
  check_grid_indexed(e, g);
  if (y.member_count() != e.member_count())
    throw PreconditionError("letpf: predicted data size mismatch");
  if (e.member_count() < 2) throw PreconditionError("letpf: need at least 2 members");

  const Eigen::VectorXd precision = diagonal_precision(obs);
  // member-by-observation table of per-entry misfits d_ml^2 / R_ll; the local
  // quadratic form is its product with the taper vector
  const Eigen::MatrixXd resid = y.values.rowwise() - obs.y_obs.transpose();
  const Eigen::MatrixXd scaled_sq = resid.array().square().rowwise() *
                                    precision.transpose().array();

  Ensemble out;
  out.members = e.members;
  parallel_for(static_cast<std::size_t>(g.cell_count()), [&](std::size_t cell) {
    const Eigen::Index i = static_cast<Eigen::Index>(cell);
    const Eigen::VectorXd taper = taper_diagonal(g.center(i), obs, cfg);
    if (taper.maxCoeff() <= 0.0) return;  // uniform local weights, identity coupling

    const Weights local = weights_from_quadratic_misfits(scaled_sq * taper);
    const TransportPlan plan = solve_ot_1d(e.members.col(i), local);
    const double m = static_cast<double>(e.member_count());
    Eigen::VectorXd updated = Eigen::VectorXd::Zero(e.member_count());
    for (const PlanEntry& entry : plan.entries)
      updated(entry.col) += m * entry.mass * e.members(entry.row, i);
    out.members.col(i) = updated;
  });
  return out;
}

}  // namespace enda
