#include "enda/forward_models.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <numbers>
#include <vector>

#include "enda/rng.hpp"

namespace enda {

GridSpec GridSpec::unit(int n) {
  if (n < 2) throw PreconditionError("grid: need at least 2 cells per side");
  return GridSpec{n, 1.0 / static_cast<double>(n)};
}

Eigen::Matrix<double, Eigen::Dynamic, 2> lattice_observation_locations(int per_side) {
  if (per_side < 1) throw PreconditionError("observation lattice: per_side >= 1");
  Eigen::Matrix<double, Eigen::Dynamic, 2> locations(per_side * per_side, 2);
  const double step = 1.0 / static_cast<double>(per_side + 1);
  Eigen::Index l = 0;
  for (int j = 1; j <= per_side; ++j)
    for (int i = 1; i <= per_side; ++i) {
      locations(l, 0) = step * i;
      locations(l, 1) = step * j;
      ++l;
    }
  return locations;
}

double cubic_forward(double u) {
  return (7.0 / 12.0) * u * u * u - 3.5 * u * u + 8.0 * u;
}

double cosine_source(double x, double y) {
  constexpr double pi = std::numbers::pi;
  return 2.0 * pi * pi * std::cos(pi * x) * std::cos(pi * y);
}

DarcySystem assemble_darcy_system(const PermeabilityField& k, const GridSpec& g,
                                  const SourceFn& source) {
  const Eigen::Index cells = g.cell_count();
  if (k.k.size() != cells)
    throw PreconditionError("darcy: permeability size does not match grid");
  if (!(k.k.array() > 0.0).all() || !k.k.allFinite())
    throw PreconditionError("darcy: permeability must be positive and finite");

  const int n = g.n;
  const double inv_dx2 = 1.0 / (g.dx * g.dx);
  const auto idx = [n](int ix, int iy) { return static_cast<Eigen::Index>(iy) * n + ix; };

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(cells) * 5);
  Eigen::VectorXd rhs(cells);

  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const Eigen::Index c = idx(ix, iy);
      const double kc = k.k(c);
      double diag = 0.0;

      const auto face = [&](int jx, int jy) {
        if (jx < 0 || jx >= n || jy < 0 || jy >= n) {
          diag += 2.0 * kc * inv_dx2;  // Dirichlet wall at half-cell distance
          return;
        }
        const double kn = k.k(idx(jx, jy));
        const double t = 2.0 * kc * kn / (kc + kn) * inv_dx2;
        diag += t;
        triplets.emplace_back(c, idx(jx, jy), -t);
      };
      face(ix - 1, iy);
      face(ix + 1, iy);
      face(ix, iy - 1);
      face(ix, iy + 1);

      triplets.emplace_back(c, c, diag);
      const Eigen::Vector2d x = g.center(c);
      rhs(c) = source(x(0), x(1));
    }
  }

  DarcySystem system;
  system.matrix.resize(cells, cells);
  system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  system.rhs = std::move(rhs);
  return system;
}

PressureField solve_pressure(const PermeabilityField& k, const GridSpec& g,
                             const SourceFn& source) {
  const DarcySystem system = assemble_darcy_system(k, g, source);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system.matrix);
  if (solver.info() != Eigen::Success)
    throw NumericalRankError("darcy: factorization failed");
  Eigen::VectorXd p = solver.solve(system.rhs);

  const double rhs_norm = system.rhs.norm();
  if (rhs_norm > 0.0) {
    const double resid = (system.matrix * p - system.rhs).norm() / rhs_norm;
    if (resid > 1e-10)
      throw IterationLimitError("darcy: solve did not reach residual tolerance");
  }
  return PressureField{std::move(p)};
}

Eigen::MatrixXd observation_matrix(const GridSpec& g, const ObservationOperatorSpec& spec) {
  if (spec.sigma <= 0.0) throw PreconditionError("observe: sigma must be positive");
  const Eigen::Index ny = spec.locations.rows();
  if (ny < 1) throw PreconditionError("observe: need at least one location");
  constexpr double pi = std::numbers::pi;
  const double prefactor = g.dx * g.dx / (2.0 * pi * spec.sigma * spec.sigma);
  const double inv_two_sigma2 = 1.0 / (2.0 * spec.sigma * spec.sigma);

  Eigen::MatrixXd h(ny, g.cell_count());
  for (Eigen::Index l = 0; l < ny; ++l) {
    const Eigen::Vector2d r = spec.locations.row(l);
    for (Eigen::Index i = 0; i < g.cell_count(); ++i) {
      const double d2 = (g.center(i) - r).squaredNorm();
      h(l, i) = prefactor * std::exp(-d2 * inv_two_sigma2);
    }
  }
  return h;
}

Eigen::VectorXd observe(const PressureField& p, const GridSpec& g,
                        const ObservationOperatorSpec& spec) {
  if (p.p.size() != g.cell_count())
    throw PreconditionError("observe: pressure size does not match grid");
  if (spec.sigma <= 0.0) throw PreconditionError("observe: sigma must be positive");
  constexpr double pi = std::numbers::pi;
  const double prefactor = g.dx * g.dx / (2.0 * pi * spec.sigma * spec.sigma);
  const double inv_two_sigma2 = 1.0 / (2.0 * spec.sigma * spec.sigma);

  Eigen::VectorXd out(spec.locations.rows());
  for (Eigen::Index l = 0; l < spec.locations.rows(); ++l) {
    const Eigen::Vector2d r = spec.locations.row(l);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < g.cell_count(); ++i)
      acc += std::exp(-(g.center(i) - r).squaredNorm() * inv_two_sigma2) * p.p(i);
    out(l) = prefactor * acc;
  }
  return out;
}

ObservationSet synthesize_observations(const PermeabilityField& truth_k, const GridSpec& g,
                                       const ObservationOperatorSpec& spec,
                                       std::uint64_t seed) {
  const PressureField p = solve_pressure(truth_k, g);
  Eigen::VectorXd y = observe(p, g, spec);
  Rng rng(seed);
  for (Eigen::Index l = 0; l < y.size(); ++l) y(l) += spec.noise_std * rng.normal();

  ObservationSet obs;
  obs.y_obs = std::move(y);
  obs.noise_cov = (spec.noise_std > 0.0)
                      ? Eigen::MatrixXd(spec.noise_std * spec.noise_std *
                                        Eigen::MatrixXd::Identity(spec.locations.rows(),
                                                                  spec.locations.rows()))
                      : Eigen::MatrixXd::Identity(spec.locations.rows(), spec.locations.rows());
  obs.locations = spec.locations;
  return obs;
}

}  // namespace enda
