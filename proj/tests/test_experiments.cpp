#include "doctest.h"
#include "latflow/experiments.hpp"

#include <cmath>
#include <stdexcept>

using namespace latflow;

TEST_CASE("records use the sample standard error") {
  const EstimateRecord r = make_record({1.0, 2.0, 3.0});
  CHECK(r.estimate == 2.0);
  CHECK(r.count == 3);
  CHECK(r.stderr_ == doctest::Approx(1.0 / std::sqrt(3.0)));
}

TEST_CASE("report lookup") {
  ExperimentReport rep;
  rep.put("a", 1.5);
  CHECK(rep.get("a") == 1.5);
  CHECK_THROWS(rep.get("b"));
}

TEST_CASE("replicate seeds are distinct and stable") {
  CHECK(replicate_seed(1, 0) == replicate_seed(1, 0));
  CHECK(replicate_seed(1, 0) != replicate_seed(1, 1));
  CHECK(replicate_seed(1, 0) != replicate_seed(2, 0));
}

TEST_CASE("gamma estimate in the constant environment") {
  const ExperimentReport rep =
      estimate_gamma({4}, 0.5, CostDistribution::constant(1.0), 2, 1, SolverConfig{});
  CHECK(rep.all_converged);
  CHECK(rep.rows.size() == 2);
  for (const auto &row : rep.rows)
    CHECK(row.objective / 16.0 == doctest::Approx(0.125).epsilon(1e-3));
}

TEST_CASE("B sweep is monotone and within the sandwich") {
  const ExperimentReport rep =
      b_sweep(4, CostDistribution::uniform(1.0), {0.5, 0.3}, 3, 7, SolverConfig{});
  CHECK(rep.get("pairs") == 3);
  CHECK(rep.get("monotonicity_violations") == 0);
  CHECK(rep.get("sandwich_violations") == 0);
}

TEST_CASE("B sweep at 1/4 reports the forced-flow identity") {
  const ExperimentReport rep =
      b_sweep(4, CostDistribution::uniform(1.0), {0.25, 0.5}, 2, 3, SolverConfig{});
  CHECK(rep.get("forced_flow_rel_error") < 1e-12);
}

TEST_CASE("concentration on a small square") {
  const TransportMeasure q = 0.1 * directional(3, Direction::Right);
  const ExperimentReport rep = concentration_experiment(
      3, 0.5, q, CostDistribution::uniform(1.0), 20, {0.1, 0.5}, 4, SolverConfig{}, 5);
  CHECK(rep.rows.size() == 20);
  CHECK(rep.get("audit_count") == 5);
  CHECK(rep.get("audit_violations") == 0);
  CHECK(rep.get("lambda1.value") == 0.5);
  CHECK_THROWS(concentration_experiment(2, 0.5, q, CostDistribution::uniform(1.0), 20, {}, 4,
                                        SolverConfig{}));
}

TEST_CASE("c_M estimate over two grids") {
  const ExperimentReport rep =
      estimate_cM(2, 2.0, CostDistribution::uniform(1.0), {1, 2}, 3, 5, SolverConfig{});
  CHECK(rep.get("estimate") > 0.0);
  CHECK(rep.get("normalized") == doctest::Approx(rep.get("estimate") / 4.0));
  CHECK(rep.get("bound_cstar_over_8") == 0.125);
}

TEST_CASE("percolation probe rows per p") {
  const ExperimentReport rep = percolation_probe(4, 0.5, {0.0, 0.5}, 1.0, 2, 2, SolverConfig{});
  CHECK(rep.rows.size() == 4);
}

TEST_CASE("experiments need at least one replicate") {
  CHECK_THROWS(estimate_gamma({4}, 0.5, CostDistribution::constant(1.0), 0, 1, SolverConfig{}));
}
