#include "enda/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace enda {

Eigen::MatrixXd TransportPlan::dense() const {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(size, size);
  for (const PlanEntry& e : entries) t(e.row, e.col) += e.mass;
  return t;
}

std::string PlanViolation::describe() const {
  std::ostringstream os;
  switch (kind) {
    case NegativeEntry:
      os << "negative entry t(" << row << "," << col << ") = " << value;
      break;
    case RowMarginal:
      os << "row " << row << " marginal off by " << value;
      break;
    case ColumnMarginal:
      os << "column " << col << " marginal off by " << value;
      break;
  }
  return os.str();
}

CostMatrix cost_matrix(const Ensemble& e) {
  if (e.member_count() < 1) throw PreconditionError("cost_matrix: empty ensemble");
  const Eigen::Index m = e.member_count();
  const Eigen::VectorXd sq = e.members.rowwise().squaredNorm();
  Eigen::MatrixXd c = sq.replicate(1, m) + sq.transpose().replicate(m, 1) -
                      2.0 * e.members * e.members.transpose();
  c = 0.5 * (c + c.transpose());
  c = c.cwiseMax(0.0);
  c.diagonal().setZero();
  return CostMatrix{std::move(c)};
}

namespace {

// Weight cleanup shared by both solvers: clamp dust to zero, renormalize.
Eigen::VectorXd prepared_row_marginals(const Weights& w, Eigen::Index m) {
  if (w.size() != m) throw FeasibilityError("transport: marginal size mismatch");
  if ((w.values.array() < 0.0).any())
    throw FeasibilityError("transport: negative row marginal");
  if (std::abs(w.values.sum() - 1.0) > 1e-9)
    throw FeasibilityError("transport: row marginals do not sum to 1");
  Eigen::VectorXd a = (w.values.array() < 1e-15).select(0.0, w.values);
  const double total = a.sum();
  if (total <= 0.0) throw FeasibilityError("transport: all marginals vanish");
  return a / total;
}

// ------------------------------------------------------------------------
// Primal network simplex on the complete bipartite transportation graph.
// Nodes 0..M-1 are rows (supplies w_m), M..2M-1 are columns (demands 1/M).
// The basis is a spanning tree of 2M-1 cells; potentials, parent pointers
// and depths are rebuilt from the basic-cell list every pivot (O(M)), which
// keeps the pivot logic simple; the pivot search over the M^2 cells is the
// dominant cost and uses cursor-based block scanning.
// ------------------------------------------------------------------------
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply)
      : cost_(cost), supply_(supply), m_(cost.rows()), demand_(1.0 / static_cast<double>(cost.rows())) {}

  TransportPlan solve() {
    northwest_corner();
    rebuild_tree();

    const double cost_scale = std::max(1.0, cost_.maxCoeff());
    const double enter_tol = 1e-11 * cost_scale;
    const long max_pivots = 2'000'000 + 2000L * static_cast<long>(m_);
    const long stall_limit = std::max<long>(64, 4L * static_cast<long>(m_));

    long pivots = 0;
    long degenerate_streak = 0;
    bool bland = false;
    while (true) {
      const Eigen::Index entering = bland ? find_entering_bland(enter_tol)
                                          : find_entering_block(enter_tol);
      if (entering < 0) break;
      if (++pivots > max_pivots)
        throw IterationLimitError("transport: pivot budget exhausted");
      const double theta = pivot(entering, bland);
      if (theta <= 1e-15) {
        if (++degenerate_streak > stall_limit) bland = true;
      } else {
        degenerate_streak = 0;
      }
      rebuild_tree();
    }
    return extract_plan();
  }

 private:
  struct BasicCell {
    Eigen::Index row, col;
    double flow;
  };

  Eigen::Index col_node(Eigen::Index c) const { return m_ + c; }

  // Always emits exactly 2M-1 cells along a staircase ending at (M-1, M-1);
  // the advance direction is forced at the boundary so floating-point drift
  // in the running remainders cannot truncate the walk.
  void northwest_corner() {
    basis_.clear();
    basis_.reserve(2 * m_ - 1);
    Eigen::Index i = 0, j = 0;
    double rem_a = supply_(0), rem_b = demand_;
    while (true) {
      basis_.push_back({i, j, std::min(std::max(rem_a, 0.0), std::max(rem_b, 0.0))});
      if (i + 1 == m_ && j + 1 == m_) break;
      const bool advance_row = (i + 1 == m_) ? false
                               : (j + 1 == m_) ? true
                                               : rem_a <= rem_b;
      if (advance_row) {
        rem_b = std::max(rem_b - rem_a, 0.0);
        rem_a = supply_(++i);
      } else {
        rem_a = std::max(rem_a - rem_b, 0.0);
        rem_b = demand_;
        ++j;
      }
    }
  }

  // parent/depth/potentials from the basic-cell list (BFS from row node 0)
  void rebuild_tree() {
    const Eigen::Index n = 2 * m_;
    adjacency_.assign(n, {});
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(basis_.size()); ++k) {
      adjacency_[basis_[k].row].push_back(k);
      adjacency_[col_node(basis_[k].col)].push_back(k);
    }
    parent_.assign(n, -1);
    parent_cell_.assign(n, -1);
    depth_.assign(n, -1);
    potential_.assign(n, 0.0);
    order_.clear();
    order_.reserve(n);

    depth_[0] = 0;
    order_.push_back(0);
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const Eigen::Index node = order_[head];
      for (const Eigen::Index k : adjacency_[node]) {
        const BasicCell& cell = basis_[k];
        const Eigen::Index other =
            (node == cell.row) ? col_node(cell.col) : cell.row;
        if (depth_[other] >= 0) continue;
        depth_[other] = depth_[node] + 1;
        parent_[other] = node;
        parent_cell_[other] = k;
        potential_[other] = cost_(cell.row, cell.col) - potential_[node];
        order_.push_back(other);
      }
    }
    if (static_cast<Eigen::Index>(order_.size()) != n)
      throw FeasibilityError("transport: basis does not span the graph");
  }

  double reduced_cost(Eigen::Index r, Eigen::Index c) const {
    return cost_(r, c) - potential_[r] - potential_[col_node(c)];
  }

  // cursor-based block search; returns flat cell index r*M+c or -1 at optimum
  Eigen::Index find_entering_block(double tol) {
    const Eigen::Index total = m_ * m_;
    const Eigen::Index block = std::max<Eigen::Index>(64, m_);
    Eigen::Index scanned = 0;
    while (scanned < total) {
      double best = -tol;
      Eigen::Index best_cell = -1;
      const Eigen::Index chunk = std::min(block, total - scanned);
      for (Eigen::Index s = 0; s < chunk; ++s) {
        const Eigen::Index flat = (cursor_ + scanned + s) % total;
        const double red = reduced_cost(flat / m_, flat % m_);
        if (red < best) {
          best = red;
          best_cell = flat;
        }
      }
      scanned += chunk;
      if (best_cell >= 0) {
        cursor_ = (best_cell + 1) % total;
        return best_cell;
      }
    }
    return -1;
  }

  // Bland fallback: first negative cell in fixed row-major order
  Eigen::Index find_entering_bland(double tol) const {
    for (Eigen::Index r = 0; r < m_; ++r)
      for (Eigen::Index c = 0; c < m_; ++c)
        if (reduced_cost(r, c) < -tol) return r * m_ + c;
    return -1;
  }

  // Push flow around the cycle closed by the entering cell; returns theta.
  double pivot(Eigen::Index entering_flat, bool bland) {
    const Eigen::Index er = entering_flat / m_;
    const Eigen::Index ec = entering_flat % m_;

    // Cycle travel order: er --(entering)--> ec, then tree path ec ... er.
    // A traversed tree cell gains flow when crossed row->col, loses it when
    // crossed col->row. Walking up from a node toward the root crosses the
    // parent cell in the (node -> parent) direction on the ec side and in the
    // (parent -> node) direction on the er side.
    cycle_cells_.clear();
    cycle_gain_.clear();

    Eigen::Index a = er;             // traversed against travel direction
    Eigen::Index b = col_node(ec);   // traversed along travel direction
    while (depth_[a] > depth_[b]) {
      cycle_cells_.push_back(parent_cell_[a]);
      cycle_gain_.push_back(a >= m_);  // parent -> node travel
      a = parent_[a];
    }
    while (depth_[b] > depth_[a]) {
      cycle_cells_.push_back(parent_cell_[b]);
      cycle_gain_.push_back(b < m_);  // node -> parent travel
      b = parent_[b];
    }
    while (a != b) {
      cycle_cells_.push_back(parent_cell_[a]);
      cycle_gain_.push_back(a >= m_);
      a = parent_[a];
      cycle_cells_.push_back(parent_cell_[b]);
      cycle_gain_.push_back(b < m_);
      b = parent_[b];
    }

    double theta = std::numeric_limits<double>::infinity();
    Eigen::Index leaving = -1;
    for (std::size_t k = 0; k < cycle_cells_.size(); ++k) {
      if (cycle_gain_[k]) continue;
      const BasicCell& cell = basis_[cycle_cells_[k]];
      const bool better =
          cell.flow < theta ||
          (cell.flow == theta && bland && leaving >= 0 &&
           cell.row * m_ + cell.col <
               basis_[leaving].row * m_ + basis_[leaving].col);
      if (better) {
        theta = cell.flow;
        leaving = cycle_cells_[k];
      }
    }
    if (leaving < 0)
      throw FeasibilityError("transport: unbounded pivot (no leaving cell)");

    for (std::size_t k = 0; k < cycle_cells_.size(); ++k) {
      BasicCell& cell = basis_[cycle_cells_[k]];
      cell.flow += cycle_gain_[k] ? theta : -theta;
      if (cell.flow < 0.0) cell.flow = 0.0;  // roundoff guard
    }
    basis_[leaving] = {er, ec, theta};
    return theta;
  }

  // Re-derive flows on the final tree from the exact marginals (leaf first),
  // wiping out the roundoff accumulated across pivots.
  TransportPlan extract_plan() {
    std::vector<double> excess(2 * m_);
    for (Eigen::Index r = 0; r < m_; ++r) excess[r] = supply_(r);
    for (Eigen::Index c = 0; c < m_; ++c) excess[col_node(c)] = -demand_;

    std::vector<double> flow(basis_.size(), 0.0);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const Eigen::Index node = *it;
      if (parent_[node] < 0) continue;
      const Eigen::Index k = parent_cell_[node];
      const double f = (node < m_) ? excess[node] : -excess[node];
      flow[k] = f;
      if (node < m_) {
        excess[node] -= f;
        excess[parent_[node]] += f;
      } else {
        excess[node] += f;
        excess[parent_[node]] -= f;
      }
    }

    TransportPlan plan;
    plan.size = m_;
    plan.entries.reserve(basis_.size());
    double total_cost = 0.0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      double f = flow[k];
      if (f < 0.0) {
        if (f < -1e-9) throw FeasibilityError("transport: negative basic flow");
        f = 0.0;
      }
      if (f == 0.0) continue;
      plan.entries.push_back({basis_[k].row, basis_[k].col, f});
      total_cost += f * cost_(basis_[k].row, basis_[k].col);
    }
    plan.cost_value = total_cost;
    return plan;
  }

  const Eigen::MatrixXd& cost_;
  Eigen::VectorXd supply_;
  Eigen::Index m_;
  double demand_;
  std::vector<BasicCell> basis_;
  std::vector<std::vector<Eigen::Index>> adjacency_;
  std::vector<Eigen::Index> parent_, parent_cell_, order_;
  std::vector<Eigen::Index> depth_;
  std::vector<double> potential_;
  std::vector<Eigen::Index> cycle_cells_;
  std::vector<char> cycle_gain_;
  Eigen::Index cursor_ = 0;
};

}  // namespace

TransportPlan solve_ot_exact(const CostMatrix& cost, const Weights& row_marginals) {
  const Eigen::Index m = cost.size();
  if (m < 1 || cost.c.cols() != m)
    throw PreconditionError("solve_ot_exact: cost matrix must be square");
  const Eigen::VectorXd supply = prepared_row_marginals(row_marginals, m);
  if (m == 1) {
    TransportPlan plan;
    plan.size = 1;
    plan.entries = {{0, 0, 1.0}};
    plan.cost_value = 0.0;
    return plan;
  }
  TransportSimplex simplex(cost.c, supply);
  return simplex.solve();
}

TransportPlan solve_ot_1d(const Eigen::VectorXd& values, const Weights& row_marginals) {
  const Eigen::Index m = values.size();
  if (m < 1) throw PreconditionError("solve_ot_1d: empty value vector");
  const Eigen::VectorXd supply = prepared_row_marginals(row_marginals, m);

  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) < values(b) || (values(a) == values(b) && a < b);
  });

  const double capacity = 1.0 / static_cast<double>(m);
  TransportPlan plan;
  plan.size = m;
  plan.entries.reserve(2 * m - 1);

  Eigen::Index si = 0, ti = 0;
  double rem_src = supply(order[0]);
  double rem_snk = capacity;
  double total_cost = 0.0;
  while (true) {
    const double f = std::min(rem_src, rem_snk);
    if (f > 0.0) {
      const Eigen::Index r = order[si], c = order[ti];
      plan.entries.push_back({r, c, f});
      const double d = values(r) - values(c);
      total_cost += f * d * d;
    }
    if (rem_src <= rem_snk) {
      rem_snk -= rem_src;
      if (++si >= m) break;
      rem_src = supply(order[si]);
    } else {
      rem_src -= rem_snk;
      if (++ti >= m) break;
      rem_snk = capacity;
    }
  }
  plan.cost_value = total_cost;
  return plan;
}

std::vector<PlanViolation> validate_plan(const TransportPlan& plan,
                                         const Weights& row_marginals) {
  constexpr double tol = 1e-9;
  std::vector<PlanViolation> violations;
  const Eigen::Index m = plan.size;
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(m);
  for (const PlanEntry& e : plan.entries) {
    if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= m) {
      violations.push_back({PlanViolation::NegativeEntry, e.row, e.col, e.mass});
      continue;
    }
    if (e.mass < -tol)
      violations.push_back({PlanViolation::NegativeEntry, e.row, e.col, e.mass});
    row_sum(e.row) += e.mass;
    col_sum(e.col) += e.mass;
  }
  const double demand = 1.0 / static_cast<double>(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double resid = row_sum(r) - row_marginals.values(r);
    if (std::abs(resid) > tol)
      violations.push_back({PlanViolation::RowMarginal, r, -1, resid});
  }
  for (Eigen::Index c = 0; c < m; ++c) {
    const double resid = col_sum(c) - demand;
    if (std::abs(resid) > tol)
      violations.push_back({PlanViolation::ColumnMarginal, -1, c, resid});
  }
  return violations;
}

}  // namespace enda
