#pragma once

#include <Eigen/Dense>

#include "enda/ensemble.hpp"
#include "enda/forward_models.hpp"

namespace enda {

struct LocalizationConfig {
  double radius = 0.0;  // > 0, domain units
};

// Compactly supported quintic taper: 1 at r = 0, 5/24 at r = 1, 0 for r >= 2.
double gaspari_cohn(double r);

// Entry l = gaspari_cohn(|x - r_l| / radius).
Eigen::VectorXd taper_diagonal(const Eigen::Vector2d& x, const ObservationSet& obs,
                               const LocalizationConfig& cfg);

// Per-grid-point square-root Kalman update: the transform at X_i uses the
// tapered precision C_i R^-1 and only coordinate i of every member changes.
// Parameters must be grid-indexed (dim == n^2) and R diagonal.
Ensemble letkf_update(const Ensemble& e, const Eigen::MatrixXd& anomalies,
                      const ObservationSet& obs, const Eigen::VectorXd& y_mean,
                      const GridSpec& g, const LocalizationConfig& cfg);

// Per-grid-point particle update: local weights from the tapered likelihood,
// then a univariate transport problem in coordinate i.
Ensemble letpf_update(const Ensemble& e, const PredictedData& y,
                      const ObservationSet& obs, const GridSpec& g,
                      const LocalizationConfig& cfg);

}  // namespace enda
