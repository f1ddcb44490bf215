#include "enda/etpf.hpp"

namespace enda {

Ensemble etpf_apply_plan(const Ensemble& e, const TransportPlan& plan) {
  if (plan.size != e.member_count())
    throw PreconditionError("etpf: plan size does not match ensemble");
  const double m = static_cast<double>(e.member_count());
  Ensemble out;
  out.members = Eigen::MatrixXd::Zero(e.member_count(), e.dim());
  for (const PlanEntry& entry : plan.entries)
    out.members.row(entry.col) += (m * entry.mass) * e.members.row(entry.row);
  return out;
}

Ensemble etpf_update(const Ensemble& e, const Weights& w, TransportBackend backend) {
  if (e.member_count() < 2)
    throw PreconditionError("etpf_update: need at least 2 members");
  validate_weights(w, e.member_count());

  if (backend == TransportBackend::Auto)
    backend = (e.dim() == 1) ? TransportBackend::OneD : TransportBackend::Exact;

  TransportPlan plan;
  if (backend == TransportBackend::OneD) {
    if (e.dim() != 1)
      throw PreconditionError("etpf_update: OneD backend requires scalar members");
    plan = solve_ot_1d(e.members.col(0), w);
  } else {
    plan = solve_ot_exact(cost_matrix(e), w);
  }
  return etpf_apply_plan(e, plan);
}

std::vector<bool> check_bounds_preserved(const Ensemble& before, const Ensemble& after,
                                         double tol) {
  if (before.dim() != after.dim())
    throw PreconditionError("check_bounds_preserved: dimension mismatch");
  std::vector<bool> ok(static_cast<std::size_t>(before.dim()), true);
  for (Eigen::Index i = 0; i < before.dim(); ++i) {
    const double lo = before.members.col(i).minCoeff() - tol;
    const double hi = before.members.col(i).maxCoeff() + tol;
    const double after_lo = after.members.col(i).minCoeff();
    const double after_hi = after.members.col(i).maxCoeff();
    ok[static_cast<std::size_t>(i)] = (after_lo >= lo && after_hi <= hi);
  }
  return ok;
}

}  // namespace enda
