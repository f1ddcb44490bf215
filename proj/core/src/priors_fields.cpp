#include "enda/priors_fields.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "enda/rng.hpp"
#include "enda/snapshot.hpp"

namespace enda {

double logit(double x) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("logit: argument outside (0,1)");
  return std::log(x / (1.0 - x));
}

double inverse_logit(double y) { return 1.0 / (1.0 + std::exp(-y)); }

Eigen::Matrix<double, 5, 1> LayeredParams::transformed() const {
  Eigen::Matrix<double, 5, 1> u;
  u << logit(a), logit(b), c, log_k1, log_k2;
  return u;
}

LayeredParams LayeredParams::from_transformed(const Eigen::Matrix<double, 5, 1>& u) {
  LayeredParams p;
  p.a = inverse_logit(u(0));
  p.b = inverse_logit(u(1));
  p.c = u(2);
  p.log_k1 = u(3);
  p.log_k2 = u(4);
  return p;
}

LayeredParams layered_truth() {
  return LayeredParams{0.6, 0.3, -0.15, std::log(12.0), std::log(5.0)};
}

Ensemble sample_five_param_prior(std::uint64_t seed, Eigen::Index member_count) {
  if (member_count < 1) throw PreconditionError("five-param prior: empty ensemble");
  Rng rng(seed);
  Ensemble e;
  e.members.resize(member_count, 5);
  for (Eigen::Index m = 0; m < member_count; ++m) {
    LayeredParams p;
    p.a = rng.uniform(0.0, 1.0);
    p.b = rng.uniform(0.0, 1.0);
    p.c = rng.uniform(-0.5, 0.5);
    p.log_k1 = std::log(rng.uniform(10.0, 15.0));
    p.log_k2 = std::log(rng.uniform(4.0, 7.0));
    e.members.row(m) = p.transformed().transpose();
  }
  return e;
}

PermeabilityField layered_permeability(const LayeredParams& p, const GridSpec& g,
                                       bool swap_layers) {
  const double k_bottom = swap_layers ? std::exp(p.log_k2) : std::exp(p.log_k1);
  const double k_top = swap_layers ? std::exp(p.log_k1) : std::exp(p.log_k2);

  PermeabilityField field;
  field.k.resize(g.cell_count());
  for (Eigen::Index i = 0; i < g.cell_count(); ++i) {
    const Eigen::Vector2d x = g.center(i);
    double interface = p.a + (p.b - p.a) * x(0);
    if (x(0) >= 0.5) interface -= p.c;
    interface = std::clamp(interface, 0.0, 1.0);
    field.k(i) = (x(1) < interface) ? k_bottom : k_top;
  }
  return field;
}

Eigen::MatrixXd exp_covariance(const GridSpec& g, double range) {
  if (range <= 0.0) throw PreconditionError("exp_covariance: range must be positive");
  const Eigen::Index cells = g.cell_count();
  Eigen::MatrixXd c(cells, cells);
  for (Eigen::Index j = 0; j < cells; ++j) {
    const Eigen::Vector2d xj = g.center(j);
    c(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < cells; ++i) {
      const double dist = (g.center(i) - xj).norm();
      const double value = std::exp(-3.0 * dist / range);
      c(i, j) = value;
      c(j, i) = value;
    }
  }
  return c;
}

KLBasis kl_basis(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols())
    throw PreconditionError("kl_basis: covariance must be square");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw PreconditionError("kl_basis: covariance not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (covariance + covariance.transpose()));
  if (eig.info() != Eigen::Success)
    throw NumericalRankError("kl_basis: eigendecomposition failed");

  const Eigen::Index n = covariance.rows();
  KLBasis basis;
  basis.eigenvalues.resize(n);
  basis.eigenvectors.resize(n, n);
  // SelfAdjointEigenSolver sorts ascending; flip to descending and clamp the
  // roundoff negatives at zero
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.eigenvalues(i) = std::max(0.0, eig.eigenvalues()(n - 1 - i));
    basis.eigenvectors.col(i) = eig.eigenvectors().col(n - 1 - i);
  }
  basis.mean_log_k = std::log(5.0);
  basis.truncation = n;
  return basis;
}

Eigen::VectorXd kl_to_logperm(const Eigen::VectorXd& modes, const KLBasis& basis,
                              Eigen::Index truncation_override) {
  const Eigen::Index trunc =
      truncation_override > 0 ? truncation_override : basis.truncation;
  if (trunc < 1 || trunc > basis.dim())
    throw PreconditionError("kl_to_logperm: truncation out of range");
  if (modes.size() != basis.dim())
    throw PreconditionError("kl_to_logperm: mode vector size mismatch");
  const Eigen::VectorXd scaled =
      basis.eigenvalues.head(trunc).cwiseSqrt().cwiseProduct(modes.head(trunc));
  Eigen::VectorXd field = basis.eigenvectors.leftCols(trunc) * scaled;
  field.array() += basis.mean_log_k;
  return field;
}

ModeProjection logperm_to_modes(const Eigen::VectorXd& field, const KLBasis& basis) {
  if (field.size() != basis.dim())
    throw PreconditionError("logperm_to_modes: field size mismatch");
  const Eigen::VectorXd centered = field.array() - basis.mean_log_k;
  const Eigen::VectorXd coeff = basis.eigenvectors.transpose() * centered;

  const double floor = 1e-12 * std::max(basis.eigenvalues(0), 0.0);
  ModeProjection proj;
  proj.modes = Eigen::VectorXd::Zero(basis.dim());
  Eigen::VectorXd reconstructed_coeff = Eigen::VectorXd::Zero(basis.dim());
  for (Eigen::Index i = 0; i < basis.dim(); ++i) {
    if (basis.eigenvalues(i) > floor && basis.eigenvalues(i) > 0.0) {
      proj.modes(i) = coeff(i) / std::sqrt(basis.eigenvalues(i));
      reconstructed_coeff(i) = coeff(i);
    }
  }
  proj.residual_norm = (coeff - reconstructed_coeff).norm();
  return proj;
}

Ensemble sample_grf_prior(const KLBasis& basis, std::uint64_t seed,
                          Eigen::Index member_count) {
  if (member_count < 1) throw PreconditionError("grf prior: empty ensemble");
  Rng rng(seed);
  Ensemble e;
  e.members.resize(member_count, basis.dim());
  for (Eigen::Index m = 0; m < member_count; ++m)
    for (Eigen::Index i = 0; i < basis.dim(); ++i) e.members(m, i) = rng.normal();
  return e;
}

void save_kl_basis(const std::string& path, const KLBasis& basis) {
  Snapshot snap;
  snap.set("eigenvalues", basis.eigenvalues);
  snap.set("eigenvectors", basis.eigenvectors);
  Eigen::MatrixXd meta(1, 2);
  meta << basis.mean_log_k, static_cast<double>(basis.truncation);
  snap.set("meta", meta);
  snap.save(path);
}

KLBasis load_kl_basis(const std::string& path) {
  const Snapshot snap = Snapshot::load(path);
  KLBasis basis;
  basis.eigenvalues = snap.get("eigenvalues");
  basis.eigenvectors = snap.get("eigenvectors");
  const Eigen::MatrixXd meta = snap.get("meta");
  if (meta.rows() != 1 || meta.cols() != 2)
    throw IoError("kl basis snapshot: malformed meta section");
  basis.mean_log_k = meta(0, 0);
  basis.truncation = static_cast<Eigen::Index>(meta(0, 1));
  if (basis.eigenvalues.size() != basis.eigenvectors.rows() ||
      basis.eigenvectors.rows() != basis.eigenvectors.cols())
    throw IoError("kl basis snapshot: inconsistent sections");
  return basis;
}

}  // namespace enda
