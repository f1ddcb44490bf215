#include <doctest.h>

#include <cmath>

#include "enda/rng.hpp"
#include "enda/transport.hpp"
#include "support/lp_oracle.hpp"

using namespace enda;

namespace {

Weights make_weights(std::initializer_list<double> values) {
  Weights w{Eigen::VectorXd(static_cast<Eigen::Index>(values.size()))};
  Eigen::Index i = 0;
  for (const double v : values) w.values(i++) = v;
  return w;
}

// small random instance with rational weights (numerators 0..9)
struct RandomInstance {
  Ensemble members;
  Weights weights;
};

RandomInstance random_instance(Rng& rng, Eigen::Index m, Eigen::Index d) {
  RandomInstance inst;
  inst.members.members.resize(m, d);
  for (Eigen::Index i = 0; i < inst.members.members.size(); ++i)
    inst.members.members.data()[i] = 3.0 * rng.normal();
  Eigen::VectorXd numerators(m);
  double total = 0.0;
  do {
    for (Eigen::Index i = 0; i < m; ++i)
      numerators(i) = static_cast<double>(rng.next_u64() % 10);
    total = numerators.sum();
  } while (total == 0.0);
  inst.weights.values = numerators / total;
  return inst;
}

}  // namespace

TEST_CASE("cost_matrix") {
  SUBCASE("identical members give the zero matrix") {
    Ensemble e;
    e.members = Eigen::MatrixXd::Constant(4, 2, 1.5);
    CHECK(cost_matrix(e).c.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("scalar members") {
    Ensemble e;
    e.members.resize(3, 1);
    e.members << 0.0, 1.0, 2.0;
    const Eigen::MatrixXd c = cost_matrix(e).c;
    Eigen::MatrixXd expected(3, 3);
    expected << 0, 1, 4, 1, 0, 1, 4, 1, 0;
    CHECK((c - expected).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("3-4-5 triangle") {
    Ensemble e;
    e.members.resize(2, 2);
    e.members << 0.0, 0.0, 3.0, 4.0;
    CHECK(cost_matrix(e).c(0, 1) == doctest::Approx(25.0));
    CHECK(cost_matrix(e).c(1, 0) == doctest::Approx(25.0));
  }
}

TEST_CASE("solve_ot_exact examples") {
  SUBCASE("uniform weights keep the identity coupling") {
    Ensemble e;
    e.members.resize(2, 1);
    e.members << 0.0, 5.0;
    const TransportPlan plan = solve_ot_exact(cost_matrix(e), make_weights({0.5, 0.5}));
    CHECK(plan.cost_value == doctest::Approx(0.0));
    const Eigen::MatrixXd t = plan.dense();
    CHECK(t(0, 0) == doctest::Approx(0.5));
    CHECK(t(1, 1) == doctest::Approx(0.5));
    CHECK(t(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("degenerate weight is forced by the marginals") {
    Ensemble e;
    e.members.resize(2, 1);
    e.members << 0.0, 5.0;
    const TransportPlan plan = solve_ot_exact(cost_matrix(e), make_weights({1.0, 0.0}));
    const Eigen::MatrixXd t = plan.dense();
    CHECK(t(0, 0) == doctest::Approx(0.5));
    CHECK(t(0, 1) == doctest::Approx(0.5));
    CHECK(t.row(1).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("three-member instance with the monotone-rearrangement optimum") {
    Ensemble e;
    e.members.resize(3, 1);
    e.members << 0.0, 1.0, 2.0;
    const Weights w = make_weights({0.5, 0.25, 0.25});
    const TransportPlan plan = solve_ot_exact(cost_matrix(e), w);
    CHECK(plan.cost_value == doctest::Approx(0.25));
    Eigen::MatrixXd expected(3, 3);
    expected << 1.0 / 3.0, 1.0 / 6.0, 0.0,
                0.0, 1.0 / 6.0, 1.0 / 12.0,
                0.0, 0.0, 0.25;
    CHECK((plan.dense() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(validate_plan(plan, w).empty());
  }
  SUBCASE("marginals that do not sum to one are rejected") {
    Ensemble e;
    e.members.resize(2, 1);
    e.members << 0.0, 1.0;
    CHECK_THROWS_AS(solve_ot_exact(cost_matrix(e), make_weights({0.7, 0.5})),
                    FeasibilityError);
  }
}

TEST_CASE("solve_ot_1d examples") {
  SUBCASE("matches the exact solver on the three-member instance") {
    Eigen::VectorXd values(3);
    values << 0.0, 1.0, 2.0;
    const Weights w = make_weights({0.5, 0.25, 0.25});
    const TransportPlan plan = solve_ot_1d(values, w);
    CHECK(plan.cost_value == doctest::Approx(0.25));
    Eigen::MatrixXd expected(3, 3);
    expected << 1.0 / 3.0, 1.0 / 6.0, 0.0,
                0.0, 1.0 / 6.0, 1.0 / 12.0,
                0.0, 0.0, 0.25;
    CHECK((plan.dense() - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("uniform weights on distinct values give the scaled identity") {
    Eigen::VectorXd values(4);
    values << 3.0, -1.0, 2.0, 0.5;
    const Weights w{Eigen::VectorXd::Constant(4, 0.25)};
    const TransportPlan plan = solve_ot_1d(values, w);
    CHECK(plan.cost_value == doctest::Approx(0.0));
    const Eigen::MatrixXd t = plan.dense();
    CHECK((t - 0.25 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("degenerate weight spreads one row over all columns") {
    Eigen::VectorXd values(3);
    values << 0.0, 1.0, 2.0;
    const TransportPlan plan = solve_ot_1d(values, make_weights({1.0, 0.0, 0.0}));
    const Eigen::MatrixXd t = plan.dense();
    for (Eigen::Index c = 0; c < 3; ++c) CHECK(t(0, c) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("validate_plan") {
  Eigen::VectorXd values(3);
  values << 0.0, 1.0, 2.0;
  const Weights w = make_weights({0.5, 0.25, 0.25});
  TransportPlan plan = solve_ot_1d(values, w);
  CHECK(validate_plan(plan, w).empty());

  SUBCASE("negated entry is reported") {
    plan.entries[0].mass = -plan.entries[0].mass;
    const auto violations = validate_plan(plan, w);
    bool negative_seen = false;
    for (const auto& v : violations)
      if (v.kind == PlanViolation::NegativeEntry) negative_seen = true;
    CHECK(negative_seen);
  }
  SUBCASE("scaled row is reported") {
    for (auto& entry : plan.entries)
      if (entry.row == 0) entry.mass *= 2.0;
    const auto violations = validate_plan(plan, w);
    bool row_seen = false;
    for (const auto& v : violations)
      if (v.kind == PlanViolation::RowMarginal && v.row == 0) row_seen = true;
    CHECK(row_seen);
    CHECK(!validate_plan(plan, w).empty());
  }
}

TEST_CASE("network simplex matches the reference LP on random instances") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 7);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.next_u64() % 3);
    const RandomInstance inst = random_instance(rng, m, d);
    const CostMatrix cost = cost_matrix(inst.members);

    const TransportPlan plan = solve_ot_exact(cost, inst.weights);
    CHECK(validate_plan(plan, inst.weights).empty());

    const testing::LpSolution reference =
        testing::lp_transport_oracle(cost.c, inst.weights.values);
    CHECK(plan.cost_value == doctest::Approx(reference.objective).epsilon(1e-8));
  }
}

TEST_CASE("1-d solver matches the exact solver on random scalar instances") {
  Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 63);
    const RandomInstance inst = random_instance(rng, m, 1);

    const TransportPlan one_d = solve_ot_1d(inst.members.members.col(0), inst.weights);
    const TransportPlan exact = solve_ot_exact(cost_matrix(inst.members), inst.weights);
    CHECK(validate_plan(one_d, inst.weights).empty());
    CHECK(validate_plan(exact, inst.weights).empty());
    CHECK(std::abs(one_d.cost_value - exact.cost_value) <=
          1e-8 * std::max(1.0, exact.cost_value));
  }
}

TEST_CASE("optimal cost is invariant under member relabeling") {
  Rng rng(44);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
    const RandomInstance inst = random_instance(rng, m, 2);
    const double base = solve_ot_exact(cost_matrix(inst.members), inst.weights).cost_value;

    // reverse the member order
    Ensemble flipped;
    flipped.members = inst.members.members.colwise().reverse();
    Weights flipped_w{inst.weights.values.reverse()};
    const double permuted = solve_ot_exact(cost_matrix(flipped), flipped_w).cost_value;
    CHECK(permuted == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("optimal cost scales quadratically with the member coordinates") {
  Rng rng(45);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
    const RandomInstance inst = random_instance(rng, m, 2);
    const double base = solve_ot_exact(cost_matrix(inst.members), inst.weights).cost_value;

    Ensemble scaled;
    scaled.members = 3.0 * inst.members.members;
    const double grown = solve_ot_exact(cost_matrix(scaled), inst.weights).cost_value;
    CHECK(grown == doctest::Approx(9.0 * base).epsilon(1e-9));
  }
}

TEST_CASE("dust weights are clamped and renormalized") {
  Ensemble e;
  e.members.resize(3, 1);
  e.members << 0.0, 1.0, 2.0;
  Weights w{Eigen::VectorXd(3)};
  w.values << 0.5 - 5e-17, 0.5 - 5e-17, 1e-16;  // sums to 1 within tolerance
  const TransportPlan plan = solve_ot_exact(cost_matrix(e), w);
  for (const PlanEntry& entry : plan.entries) CHECK(entry.row != 2);
  Weights clean{Eigen::VectorXd(3)};
  clean.values << 0.5, 0.5, 0.0;
  CHECK(validate_plan(plan, clean).empty());
}
