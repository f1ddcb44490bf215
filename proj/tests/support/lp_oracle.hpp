#pragma once

// Reference LP solver for the transportation problem, independent of the
// network simplex in core. Two-phase dense tableau simplex with Bland's rule
// (guaranteed finite) over the raw standard form: variables x[m*M+j] = t_mj,
// M row-sum constraints, M-1 column-sum constraints (last one redundant).
// Termination with all reduced costs >= -tol certifies optimality.

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace enda::testing {

struct LpSolution {
  double objective = 0.0;
  Eigen::MatrixXd plan;
};

inline LpSolution lp_transport_oracle(const Eigen::MatrixXd& cost,
                                      const Eigen::VectorXd& weights) {
  const Eigen::Index m = cost.rows();
  const Eigen::Index n_vars = m * m;
  const Eigen::Index n_rows = 2 * m - 1;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_rows, n_vars);
  Eigen::VectorXd b(n_rows);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) a(r, r * m + c) = 1.0;
    b(r) = weights(r);
  }
  for (Eigen::Index c = 0; c + 1 < m; ++c) {
    for (Eigen::Index r = 0; r < m; ++r) a(m + c, r * m + c) = 1.0;
    b(m + c) = 1.0 / static_cast<double>(m);
  }

  // tableau with artificial variables appended
  const Eigen::Index total = n_vars + n_rows;
  Eigen::MatrixXd tab(n_rows, total + 1);
  tab.leftCols(n_vars) = a;
  tab.middleCols(n_vars, n_rows) = Eigen::MatrixXd::Identity(n_rows, n_rows);
  tab.col(total) = b;
  std::vector<Eigen::Index> basis(n_rows);
  for (Eigen::Index r = 0; r < n_rows; ++r) basis[r] = n_vars + r;

  const double tol = 1e-11;
  const auto run_phase = [&](const Eigen::VectorXd& obj_cost, bool allow_artificial) {
    for (long iter = 0; iter < 200000; ++iter) {
      // reduced costs via the simplex multipliers y = c_B B^-1 read from the
      // tableau: rc_j = c_j - sum_r c_basis(r) * tab(r, j)
      Eigen::VectorXd basis_cost(n_rows);
      for (Eigen::Index r = 0; r < n_rows; ++r) basis_cost(r) = obj_cost(basis[r]);

      Eigen::Index entering = -1;
      const Eigen::Index scan_limit = allow_artificial ? total : n_vars;
      for (Eigen::Index j = 0; j < scan_limit && entering < 0; ++j) {
        bool basic = false;
        for (Eigen::Index r = 0; r < n_rows; ++r)
          if (basis[r] == j) basic = true;
        if (basic) continue;
        const double rc = obj_cost(j) - basis_cost.dot(tab.col(j));
        if (rc < -tol) entering = j;  // Bland: smallest index
      }
      if (entering < 0) return;

      // ratio test; among minimum ratios keep the smallest basic index (Bland)
      Eigen::Index leaving = -1;
      double best_ratio = 0.0;
      for (Eigen::Index r = 0; r < n_rows; ++r) {
        const double coef = tab(r, entering);
        if (coef <= tol) continue;
        const double ratio = tab(r, total) / coef;
        const bool strictly_better = leaving < 0 || ratio < best_ratio - tol;
        const bool tie_better =
            leaving >= 0 && ratio <= best_ratio + tol && basis[r] < basis[leaving];
        if (strictly_better || tie_better) {
          leaving = r;
          best_ratio = strictly_better ? ratio : std::min(ratio, best_ratio);
        }
      }
      if (leaving < 0) throw std::runtime_error("lp oracle: unbounded");

      tab.row(leaving) /= tab(leaving, entering);
      for (Eigen::Index r = 0; r < n_rows; ++r) {
        if (r == leaving) continue;
        tab.row(r) -= tab(r, entering) * tab.row(leaving);
      }
      basis[leaving] = entering;
    }
    throw std::runtime_error("lp oracle: iteration limit");
  };

  // phase 1: minimize the artificial mass
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total);
  phase1.tail(n_rows).setOnes();
  run_phase(phase1, true);
  double infeasibility = 0.0;
  for (Eigen::Index r = 0; r < n_rows; ++r)
    if (basis[r] >= n_vars) infeasibility += tab(r, total);
  if (infeasibility > 1e-8) throw std::runtime_error("lp oracle: infeasible");

  // phase 2: original objective (artificial columns stay frozen out)
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) phase2(r * m + c) = cost(r, c);
  run_phase(phase2, false);

  LpSolution sol;
  sol.plan = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    if (basis[r] < n_vars && tab(r, total) > 0.0)
      sol.plan(basis[r] / m, basis[r] % m) = tab(r, total);
  }
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) sol.objective += sol.plan(r, c) * cost(r, c);
  return sol;
}

}  // namespace enda::testing
