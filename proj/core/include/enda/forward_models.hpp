#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>

#include "enda/ensemble.hpp"

namespace enda {

// Uniform n x n cell-centered grid on the unit square. Flattened index
// idx = iy * n + ix, cell center ((ix + 1/2) dx, (iy + 1/2) dx).
struct GridSpec {
  int n = 0;
  double dx = 0.0;

  static GridSpec unit(int n);
  Eigen::Index cell_count() const { return static_cast<Eigen::Index>(n) * n; }
  Eigen::Vector2d center(Eigen::Index idx) const {
    return {(static_cast<double>(idx % n) + 0.5) * dx,
            (static_cast<double>(idx / n) + 0.5) * dx};
  }
};

struct PermeabilityField {
  Eigen::VectorXd k;  // n^2 positive cell values
};

struct PressureField {
  Eigen::VectorXd p;  // n^2 cell values
};

// Gaussian-kernel pressure functional and its noise model. sigma is the
// kernel width; noise_std the observation error standard deviation. With the
// shipped defaults (sigma = 0.01 on an n = 50 grid) the kernel is narrower
// than a cell, so the functional acts as a scaled near-point evaluation; the
// formula is applied verbatim either way.
struct ObservationOperatorSpec {
  double sigma = 0.01;
  double noise_std = 0.09;
  Eigen::Matrix<double, Eigen::Dynamic, 2> locations;
};

// Interior k x k lattice (i/(k+1), j/(k+1)); the default 4 x 4 gives the 16
// observation points used by both Darcy test problems.
Eigen::Matrix<double, Eigen::Dynamic, 2> lattice_observation_locations(int per_side = 4);

// (7/12) u^3 - (7/2) u^2 + 8 u
double cubic_forward(double u);

using SourceFn = std::function<double(double, double)>;

// 2 pi^2 cos(pi x) cos(pi y)
double cosine_source(double x, double y);

struct DarcySystem {
  Eigen::SparseMatrix<double> matrix;  // SPD, n^2 x n^2
  Eigen::VectorXd rhs;
};

// Five-point cell-centered scheme for -div(k grad P) = f with homogeneous
// Dirichlet boundary. Interior face transmissibility is the harmonic mean of
// the adjacent cell permeabilities over dx^2; boundary faces use the half-cell
// distance (coefficient 2 k_cell / dx^2).
DarcySystem assemble_darcy_system(const PermeabilityField& k, const GridSpec& g,
                                  const SourceFn& source = cosine_source);

// Sparse Cholesky solve of the assembled system, verified to a relative
// residual of 1e-10 (IterationLimitError otherwise).
PressureField solve_pressure(const PermeabilityField& k, const GridSpec& g,
                             const SourceFn& source = cosine_source);

// L_l = 1/(2 pi sigma^2) sum_i exp(-|X_i - r_l|^2 / (2 sigma^2)) P_i dx^2
Eigen::VectorXd observe(const PressureField& p, const GridSpec& g,
                        const ObservationOperatorSpec& spec);

// The same functional as an N_y x n^2 matrix.
Eigen::MatrixXd observation_matrix(const GridSpec& g, const ObservationOperatorSpec& spec);

// Twin-experiment observations: solve the truth pressure, apply the
// functional, add seeded iid N(0, noise_std^2); R = noise_std^2 I.
ObservationSet synthesize_observations(const PermeabilityField& truth_k, const GridSpec& g,
                                       const ObservationOperatorSpec& spec,
                                       std::uint64_t seed);

}  // namespace enda
