#include "doctest.h"
#include "router_checks.hpp"

using namespace latflow;
using test::Rational;

TEST_CASE("router bounds hold in exact arithmetic") {
  const test::RouterCheck r = test::check_all_routers();
  CHECK(r.instances > 100);
  for (const auto &f : r.failures)
    FAIL_CHECK(f);
}

TEST_CASE("lemma 7 router: identity at L = 1, constant volume otherwise") {
  const Torus t(6);
  const auto id = router_lemma7<double>(t, 1);
  CHECK(flo(id, t.num_edges()).maxCoeff() == 0.0);
  const auto mu = router_lemma7<Rational>(t, 3);
  const test::RVector f = flo(mu, t.num_edges());
  for (Eigen::Index e = 0; e < f.size(); ++e)
    CHECK(f[e] == Rational(8, 3 * 4 * 36));
  CHECK(lemma7_volume(6, 3) == doctest::Approx(8.0 / 432.0));
  CHECK(lemma7_bound(6, 3) == doctest::Approx(3.0 / 144.0));
  CHECK_THROWS(router_lemma7<double>(t, 2));
}

TEST_CASE("lemma 9 router on a unit pair") {
  const ExtendedSquare sq(3);
  TransportMeasure q(3);
  q({Side::Left, 0}, {Side::Top, 2}) = 1.0;
  const auto mu = router_lemma9<double>(sq, q);
  CHECK(flo(mu, sq.num_edges()).maxCoeff() <= 4.0);
  CHECK(total_weight(mu) == doctest::Approx(1.0));
  CHECK(router_lemma9<double>(sq, TransportMeasure(3)).empty());
}

TEST_CASE("one-turn paths are self-avoiding") {
  for (int m = 1; m <= 4; ++m) {
    const ExtendedSquare sq(m);
    for (int k = 0; k < 4 * m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
          const LatticePath p =
              make_path(sq.graph(), detail::one_turn(sq, boundary_point(k, m), i, j));
          CHECK(is_self_avoiding(p));
          CHECK(p.exit() == sq.internal_vertex(i, j));
        }
  }
}
