#include <doctest.h>

#include "enda/etpf.hpp"
#include "enda/rng.hpp"

using namespace enda;

namespace {

Weights make_weights(std::initializer_list<double> values) {
  Weights w{Eigen::VectorXd(static_cast<Eigen::Index>(values.size()))};
  Eigen::Index i = 0;
  for (const double v : values) w.values(i++) = v;
  return w;
}

}  // namespace

TEST_CASE("etpf_update examples") {
  SUBCASE("uniform weights with distinct members change nothing") {
    Ensemble e;
    e.members.resize(3, 2);
    e.members << 0.0, 1.0, 2.0, -1.0, 5.0, 2.5;
    const Ensemble out =
        etpf_update(e, Weights{Eigen::VectorXd::Constant(3, 1.0 / 3.0)});
    CHECK((out.members - e.members).cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("degenerate weight collapses onto one member") {
    Ensemble e;
    e.members.resize(3, 2);
    e.members << 0.0, 1.0, 2.0, -1.0, 5.0, 2.5;
    const Ensemble out = etpf_update(e, make_weights({1.0, 0.0, 0.0}));
    for (Eigen::Index m = 0; m < 3; ++m)
      CHECK((out.members.row(m) - e.members.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("three-member scalar analysis") {
    Ensemble e;
    e.members.resize(3, 1);
    e.members << 0.0, 1.0, 2.0;
    const Ensemble out = etpf_update(e, make_weights({0.5, 0.25, 0.25}));
    CHECK(out.members(0, 0) == doctest::Approx(0.0));
    CHECK(out.members(1, 0) == doctest::Approx(0.5));
    CHECK(out.members(2, 0) == doctest::Approx(1.75));
    CHECK(out.members.col(0).mean() == doctest::Approx(0.75));
  }
  SUBCASE("exact and one-d backends agree on scalar ensembles") {
    Ensemble e;
    e.members.resize(4, 1);
    e.members << -2.0, 0.3, 0.9, 4.0;
    const Weights w = make_weights({0.4, 0.1, 0.3, 0.2});
    const Ensemble a = etpf_update(e, w, TransportBackend::OneD);
    const Ensemble b = etpf_update(e, w, TransportBackend::Exact);
    CHECK((a.members - b.members).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("etpf bound preservation and mean identity on random ensembles") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 12);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.next_u64() % 4);
    Ensemble e;
    e.members.resize(m, d);
    for (Eigen::Index i = 0; i < e.members.size(); ++i)
      e.members.data()[i] = 4.0 * rng.normal();

    Eigen::VectorXd raw(m);
    for (Eigen::Index i = 0; i < m; ++i) raw(i) = std::exp(2.0 * rng.normal());
    const Weights w{raw / raw.sum()};

    const Ensemble out = etpf_update(e, w);
    for (const bool ok : check_bounds_preserved(e, out)) CHECK(ok);

    const Eigen::VectorXd is_mean = is_posterior_mean(e, w);
    CHECK((ensemble_mean(out) - is_mean).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("check_bounds_preserved") {
  Ensemble before;
  before.members.resize(2, 2);
  before.members << 0.0, 0.0, 1.0, 1.0;

  SUBCASE("identical ensembles pass") {
    for (const bool ok : check_bounds_preserved(before, before)) CHECK(ok);
  }
  SUBCASE("excursions outside the background range are flagged") {
    Ensemble after = before;
    after.members(0, 1) = 2.0;  // outside [0, 1] in coordinate 1
    const std::vector<bool> ok = check_bounds_preserved(before, after);
    CHECK(ok[0]);
    CHECK(!ok[1]);
  }
}
