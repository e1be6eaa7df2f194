#include "doctest.h"
#include "latflow/rng.hpp"
#include "latflow/solver.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace latflow;

TEST_CASE("constant environment: the uniform flow is optimal") {
  SolverConfig cfg;
  for (int n : {4, 6}) {
    const Environment env = sample_torus_env(n, CostDistribution::constant(1.0), 1);
    const SolveResult r = solve_global(n, env, cfg);
    CHECK(r.converged);
    CHECK(r.objective / (n * n) == doctest::Approx(0.125).epsilon(1e-3));
    CHECK(r.max_volume <= 0.5 + 1e-12);
  }
}

TEST_CASE("B = 1/4 forces the uniform flow") {
  SolverConfig cfg;
  cfg.cap = 0.25;
  const Environment env = sample_torus_env(4, CostDistribution::uniform(1.0), 3);
  const SolveResult r = solve_global(4, env, cfg);
  CHECK(r.objective == doctest::Approx(env.cost().sum() / 16.0).epsilon(1e-12));
  CHECK(r.gap == 0.0);
}

TEST_CASE("global solve certifies its gap and respects the cap") {
  SolverConfig cfg;
  cfg.cap = 0.3;
  const Environment env = sample_torus_env(4, CostDistribution::uniform(1.0), 9);
  const SolveResult r = solve_global(4, env, cfg);
  CHECK(r.converged);
  CHECK(r.gap >= 0.0);
  CHECK(r.gap <= cfg.tol * r.objective * (1 + 1e-9));
  CHECK(r.lower_bound <= r.objective);
  CHECK(r.max_volume <= 0.3 * (1 + 1e-9));
  CHECK(r.objective >= cost(uniform_flow(4).volume, env) - 2.0 - r.gap);
  CHECK(r.flow.sum() == doctest::Approx(uniform_flow(4).volume.sum()).epsilon(1e-9));
}

TEST_CASE("warm start from a smaller cap is never worse") {
  SolverConfig a;
  a.cap = 0.3;
  const Environment env = sample_torus_env(4, CostDistribution::uniform(1.0), 4);
  const SolveResult r1 = solve_global(4, env, a);
  SolverConfig b = a;
  b.cap = 0.5;
  const SolveResult r2 = solve_global(4, env, b, {r1.decomposition});
  CHECK(r2.objective <= r1.objective);
}

TEST_CASE("global solver rejects caps below 1/4 and oversized tori") {
  SolverConfig cfg;
  cfg.cap = 0.2;
  const Environment env = sample_torus_env(4, CostDistribution::constant(1.0), 1);
  CHECK_THROWS_AS(solve_global(4, env, cfg), std::invalid_argument);
  cfg.cap = 0.5;
  cfg.max_n = 3;
  CHECK_THROWS_AS(solve_global(4, env, cfg), std::invalid_argument);
}

TEST_CASE("local solve agrees with the brute-force oracle") {
  SolverConfig cfg;
  cfg.cap = 2.0;
  cfg.tol = 1e-7;
  for (int s = 0; s < 4; ++s) {
    const TransportMeasure q = test::fit_under(test::random_sparse(2, 0.2, 100 + s), 2.0);
    const Environment env = sample_square_env(2, CostDistribution::uniform(1.0), 200 + s);
    const SolveResult fw = solve_local(2, env, q, cfg);
    const SolveResult bf = brute_force_local(2, env, q, cfg);
    CHECK(fw.converged);
    CHECK(fw.objective == doctest::Approx(bf.objective).epsilon(1e-5));
  }
}

TEST_CASE("local solve flags measures that cannot fit under the cap") {
  TransportMeasure q(2);
  q({Side::Left, 0}, {Side::Right, 0}) = 3.0;
  CHECK_FALSE(local_cap_admissible(q, 2.0));
  SolverConfig cfg;
  cfg.cap = 2.0;
  const Environment env = sample_square_env(2, CostDistribution::constant(1.0), 1);
  CHECK(solve_local(2, env, q, cfg).infeasible);
  CHECK(solve_local(2, env, TransportMeasure(2), cfg).objective == 0.0);
}

TEST_CASE("straight transport on a constant square") {
  // Straight rows cost 3 per row; the optimum can only spread that out.
  const TransportMeasure q = directional(3, Direction::Right);
  SolverConfig cfg;
  cfg.cap = 2.0;
  const Environment env = sample_square_env(3, CostDistribution::constant(1.0), 1);
  const SolveResult r = solve_local(3, env, q, cfg);
  CHECK(r.objective <= 9.0 + 1e-9);
  CHECK(r.objective > 0.0);
  CHECK(r.waldrop_residual < 1e-3);
}

TEST_CASE("shortest-path tree on the unit-weight torus") {
  const Torus t(5);
  const ShortestPathTree tree =
      shortest_path_tree(t.graph(), Eigen::VectorXd::Ones(t.num_edges()), 0);
  for (int v = 0; v < 25; ++v)
    CHECK(tree.dist[v] == torus_distance({0, 0}, t.vertex(v), 5));
  CHECK(tree.parent_edge[0] == -1);
  CHECK(tree.order.front() == 0);
}

TEST_CASE("marginal weights") {
  Eigen::VectorXd c(2), f(2);
  c << 1, 0;
  f << 0.5, 0.25;
  const Eigen::VectorXd w = marginal_weights(c, f, 1.0, 0.0, 1e-9);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 1e-9);
}

TEST_CASE("sparse volumes") {
  FlowVolume v = FlowVolume::Zero(5);
  v[1] = 2;
  v[4] = 1;
  const SparseVolume s = sparse_volume(v);
  CHECK(s.edge == std::vector<int>{1, 4});
  CHECK(s.dot(Eigen::VectorXd::Ones(5)) == 3.0);
}

TEST_CASE("option names") {
  CHECK(parse_capacity_mode(to_string(CapacityMode::Penalty)) == CapacityMode::Penalty);
  CHECK(parse_fw_variant(to_string(FwVariant::Away)) == FwVariant::Away);
  CHECK_THROWS(parse_fw_variant("newton"));
}

TEST_CASE("both solvers flag a measure that passes the boundary check but cannot fit") {
  TransportMeasure q = test::random_sparse(2, 0.15, derive_seed(31, 7));
  const Eigen::VectorXd ent = q.entrance(), exi = q.exit();
  double load = 0.0;
  for (int b = 0; b < 8; ++b)
    load = std::max(load, ent[b] + exi[b] - 2.0 * q.mass(b, b));
  q.mass *= 1.8 / load;
  SolverConfig cfg;
  cfg.cap = 2.0;
  cfg.tol = 1e-7;
  REQUIRE(local_cap_admissible(q, cfg.cap));
  const Environment env = sample_square_env(2, CostDistribution::uniform(1.0), 77);
  const SolveResult fw = solve_local(2, env, q, cfg);
  const SolveResult bf = brute_force_local(2, env, q, cfg);
  CHECK(fw.infeasible);
  CHECK_FALSE(fw.converged);
  CHECK(bf.infeasible);
}
