#include "doctest.h"
#include "latflow/transport.hpp"
#include "support.hpp"

#include <cmath>

using namespace latflow;

TEST_CASE("directional measures") {
  const TransportMeasure r = directional(3, Direction::Right);
  CHECK(r.total() == 3.0);
  CHECK(in_QM(r));
  CHECK(drift(r) == Eigen::Vector2d(1, 0));
  CHECK(drift(directional(3, Direction::Down)) == Eigen::Vector2d(0, -1));
  const auto [ent, exi] = marginals(r);
  CHECK(ent.sum() == exi.sum());
  CHECK(reflected_exit(r) == ent);
}

TEST_CASE("all-pairs measure has zero drift") {
  const TransportMeasure q = all_pairs_measure(3);
  CHECK(q.total() == doctest::Approx(12.0));
  CHECK(in_QM(q));
  CHECK(drift(q).norm() < 1e-12);
}

TEST_CASE("drift measures realise their drift") {
  for (const Eigen::Vector2d u : {Eigen::Vector2d(0.3, 0.8), Eigen::Vector2d(0.0, 0.5)}) {
    const TransportMeasure a = drift_measure(4, u, {DriftBasis::AxisAligned, 0.0});
    CHECK((drift(a) - u).norm() < 1e-12);
    CHECK(in_QM(a));
    const TransportMeasure b = drift_measure(4, u, {DriftBasis::MinimalDisplacement, 1e-3});
    CHECK(in_QM(b));
  }
}

TEST_CASE("isotropic grid mixture") {
  const IsotropicMixture mix = isotropic_grid(2, 3);
  CHECK(mix.components.size() == 9);
  double w = 0.0;
  for (const auto &c : mix.components) {
    w += c.weight;
    CHECK(in_QM(c.q, 1e-12));
  }
  CHECK(w == doctest::Approx(1.0));
  CHECK(mix.resolution_bound() == doctest::Approx(0.5 / 3));
  CHECK(in_QM(mix.mean(), 1e-12));
}

TEST_CASE("qm defect measures entrance/exit imbalance") {
  TransportMeasure q(2);
  q({Side::Left, 0}, {Side::Left, 1}) = 1.0;
  CHECK(qm_defect(q) == 2.0);
  CHECK_FALSE(in_QM(q));
}

TEST_CASE("smoothing is block constant and keeps mass") {
  for (int s = 0; s < 5; ++s) {
    const TransportMeasure q = test::random_sparse(4, 0.3, s);
    const SmoothedMeasure qs = smooth(q, 2);
    CHECK(qs.q.m == 8);
    CHECK(is_block_constant(qs));
    CHECK(qs.q.total() == doctest::Approx(q.total()));
    const SmoothedMeasure tr = trim(qs, 0.1);
    CHECK(is_block_constant(tr));
    for (int a = 0; a < 32; ++a)
      for (int b = 0; b < 32; ++b) {
        const double steps = tr.q.mass(a, b) / 0.05;
        CHECK(std::abs(steps - std::round(steps)) < 1e-9);
        CHECK(tr.q.mass(a, b) <= qs.q.mass(a, b));
      }
  }
  CHECK_THROWS(smooth(test::random_sparse(4, 0.3, 1), 3));
}

TEST_CASE("trimmed cardinality") {
  CHECK(trimmed_cardinality_log10(4, 2, 1.0, 1.0) == doctest::Approx(64.0 * std::log10(2.0)));
  CHECK(feasible_mass_bound(3, 0.5) == 3.0);
}
