#pragma once

#include <vector>

#include "enda/ensemble.hpp"
#include "enda/transport.hpp"

namespace enda {

enum class TransportBackend {
  Auto,   // OneD for scalar parameters, Exact otherwise
  Exact,  // network simplex on the full cost matrix
  OneD,   // monotone rearrangement, scalar parameters only
};

// Particle-filter analysis by optimal transport: u_j^a = M sum_m t*_mj u_m^b
// with T* coupling the importance weights to the uniform measure. The update
// is deterministic given the solver's tie-breaking; the analysis mean equals
// the weighted mean sum_m w_m u_m^b, and every analysis coordinate stays
// inside the background range of that coordinate.
Ensemble etpf_update(const Ensemble& e, const Weights& w,
                     TransportBackend backend = TransportBackend::Auto);

Ensemble etpf_apply_plan(const Ensemble& e, const TransportPlan& plan);

// Coordinate i is true iff every after-member lies within the background
// min/max of coordinate i (tolerance widened interval).
std::vector<bool> check_bounds_preserved(const Ensemble& before, const Ensemble& after,
                                         double tol = 1e-10);

}  // namespace enda
