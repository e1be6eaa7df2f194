#include "doctest.h"
#include "latflow/environment.hpp"

#include <stdexcept>

using namespace latflow;

TEST_CASE("cost distributions parse and report their means") {
  CHECK(CostDistribution::parse("constant:2").mean() == 2.0);
  CHECK(CostDistribution::parse("constant:2").is_degenerate());
  CHECK(CostDistribution::parse("uniform:3").mean() == doctest::Approx(1.5));
  CHECK(CostDistribution::parse("uniform:3").c_star() == 3.0);
  const auto tp = CostDistribution::parse("twopoint:0.25:2");
  CHECK(tp.mean() == doctest::Approx(1.5));
  CHECK(tp.sample(0.1) == 0.0);
  CHECK(tp.sample(0.9) == 2.0);
  const auto d = CostDistribution::parse("discrete:1:0.25,3:0.75");
  CHECK(d.mean() == doctest::Approx(2.5));
  CHECK(d.c_star() == 3.0);
  CHECK(CostDistribution::parse(d.describe()).mean() == doctest::Approx(d.mean()));
  CHECK_THROWS(CostDistribution::parse("gamma:1"));
  CHECK_THROWS(CostDistribution::parse("uniform:-1"));
  CHECK_THROWS(CostDistribution::parse("twopoint:1.5:1"));
}

TEST_CASE("samples stay in [0, c*]") {
  const auto u = CostDistribution::uniform(2.0);
  for (double x = 0.0; x < 1.0; x += 0.01) {
    CHECK(u.sample(x) >= 0.0);
    CHECK(u.sample(x) <= 2.0);
  }
}

TEST_CASE("sampled environments are deterministic in the seed") {
  const auto dist = CostDistribution::uniform(1.0);
  const Environment a = sample_torus_env(6, dist, 11);
  const Environment b = sample_torus_env(6, dist, 11);
  const Environment c = sample_torus_env(6, dist, 12);
  CHECK(a.num_edges() == expected_edge_count(EnvironmentKind::Torus, 6));
  CHECK(a.cost() == b.cost());
  CHECK(environment_hash(a) == environment_hash(b));
  CHECK(environment_hash(a) != environment_hash(c));
  CHECK(a.cost().minCoeff() >= 0.0);
  CHECK(a.cost().maxCoeff() <= 1.0);
}

TEST_CASE("square environments have zero cost on right and top half-edges") {
  const Environment e = sample_square_env(4, CostDistribution::constant(1.0), 1);
  CHECK(e.num_edges() == 2 * 16 + 8);
  CHECK(e.cost().head(32).minCoeff() == 1.0);
  CHECK(e.cost().tail(8).maxCoeff() == 0.0);
}

TEST_CASE("restricting a torus environment") {
  const Environment t = sample_torus_env(8, CostDistribution::uniform(1.0), 5);
  const Torus torus(8);
  const ExtendedSquare sq(4);
  const Environment loc = restrict_env(t, 1, 0, 8, 4);
  CHECK(loc.kind() == EnvironmentKind::Square);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i)
      for (Axis a : {Axis::Horizontal, Axis::Vertical})
        CHECK(loc[sq.assigned_edge(i, j, a)] == t[torus.edge_index({4 + i, j}, a)]);
  CHECK(loc.cost().tail(8).maxCoeff() == 0.0);
  CHECK(restrict_env_at(t, {4, 0}, 4).cost() == loc.cost());
  CHECK_THROWS(restrict_env(t, 0, 0, 8, 3));
}

TEST_CASE("with_cost replaces one edge") {
  const Environment e = sample_torus_env(4, CostDistribution::constant(1.0), 1);
  const Environment f = e.with_cost(3, 0.25);
  CHECK(f[3] == 0.25);
  CHECK((f.cost() - e.cost()).cwiseAbs().sum() == doctest::Approx(0.75));
}

TEST_CASE("fnv1a64 of the empty input is the offset basis") {
  CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ULL);
  const char a = 'a';
  CHECK(fnv1a64(&a, 1) == 0xaf63dc4c8601ec8cULL);
}
