#pragma once

#include <Eigen/Dense>
#include <vector>

#include "enda/ensemble.hpp"

namespace enda {

// Pairwise squared Euclidean distances between members: symmetric, zero
// diagonal, non-negative.
struct CostMatrix {
  Eigen::MatrixXd c;

  Eigen::Index size() const { return c.rows(); }
};

struct PlanEntry {
  Eigen::Index row = 0;  // background member index
  Eigen::Index col = 0;  // analysis slot index
  double mass = 0.0;
};

// Coupling between the weighted background measure (row marginals w_m) and
// the uniform analysis measure (column marginals 1/M). An optimal basic
// solution has at most 2M-1 nonzero entries, so the plan is stored sparse;
// dense() materializes the M x M matrix for small problems.
struct TransportPlan {
  Eigen::Index size = 0;
  std::vector<PlanEntry> entries;
  double cost_value = 0.0;

  Eigen::MatrixXd dense() const;
};

struct PlanViolation {
  enum Kind { NegativeEntry, RowMarginal, ColumnMarginal } kind;
  Eigen::Index row = -1;  // for NegativeEntry / RowMarginal
  Eigen::Index col = -1;  // for NegativeEntry / ColumnMarginal
  double value = 0.0;     // offending entry or marginal residual

  std::string describe() const;
};

CostMatrix cost_matrix(const Ensemble& e);

// Exact solver: primal network simplex on the bipartite transportation graph
// (northwest-corner start, block pivot search, Bland fallback against
// degenerate stalling). Row marginals below 1e-15 are clamped to zero and the
// rest renormalized. Throws FeasibilityError when the marginals do not sum to
// one, IterationLimitError if the pivot budget is exhausted.
TransportPlan solve_ot_exact(const CostMatrix& cost, const Weights& row_marginals);

// Scalar-member specialization: monotone rearrangement (sort both measures,
// sweep mass in order), which attains the optimum of the same linear program
// for the squared-distance cost.
TransportPlan solve_ot_1d(const Eigen::VectorXd& values, const Weights& row_marginals);

// Empty iff non-negativity, row-marginal and column-marginal constraints all
// hold within 1e-9.
std::vector<PlanViolation> validate_plan(const TransportPlan& plan, const Weights& row_marginals);

}  // namespace enda
