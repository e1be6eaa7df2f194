#include "doctest.h"
#include "latflow/construction.hpp"
#include "support.hpp"

#include <stdexcept>

using namespace latflow;

namespace {
TransportMeasure repaired_right(int m) {
  return repair_irreducible(directional(m, Direction::Right), 0.05);
}
} // namespace

TEST_CASE("skeleton chain is stochastic with a stationary law") {
  const SkeletonChain c = build_chain(repaired_right(2), 8, 2);
  CHECK(c.t == doctest::Approx(8.0 * c.mass / 4.0));
  CHECK(c.t_floor == static_cast<int>(c.t));
  CHECK(stationarity_defect(c) < 1e-10);
  CHECK(c.pi.sum() == doctest::Approx(1.0));
  const Eigen::VectorXd rows = c.q1 * Eigen::VectorXd::Ones(c.q1.cols());
  CHECK((rows.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("chain construction validates its input") {
  TransportMeasure unbalanced(2);
  unbalanced({Side::Left, 0}, {Side::Left, 1}) = 1.0;
  CHECK_THROWS(build_chain(unbalanced, 8, 2));
  CHECK_THROWS(build_chain(TransportMeasure(2), 8, 2));
  CHECK_THROWS(build_chain(repaired_right(2), 9, 2));
}

TEST_CASE("repair makes a measure irreducible and keeps its drift") {
  const TransportMeasure q = directional(3, Direction::Up);
  CHECK_FALSE(check_irreducible(projection(q)));
  const TransportMeasure r = repair_irreducible(q, 0.1);
  CHECK(check_irreducible(projection(r)));
  CHECK((drift(r) - drift(q)).norm() < 1e-12);
  CHECK(in_QM(r, 1e-12));
}

TEST_CASE("mean projected step matches the closed form") {
  for (int s = 0; s < 3; ++s) {
    const TransportMeasure q =
        repair_irreducible(drift_measure(3, {0.2 * s, 0.9}, {DriftBasis::AxisAligned, 0.0}), 0.1);
    CHECK((gbar(projection(q)) - gbar_closed_form(q)).norm() < 1e-9);
  }
}

TEST_CASE("irreducibility of small matrices") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  CHECK(is_irreducible(a));
  a << 1, 0, 0, 1;
  CHECK_FALSE(is_irreducible(a));
}

TEST_CASE("exact skeleton measure reproduces Q and Properties 3") {
  IsotropicMixture mix;
  mix.m = 2;
  mix.grid = 1;
  mix.components.push_back({1.0, repaired_right(2), {1.0, 0.0}});
  const SkeletonMeasure s = skeleton_measure(mix, 8, 2);
  CHECK(nu_s_defect(s, mix.mean()) < 1e-9);
  const Properties3Report p = properties3(s);
  CHECK(p.total_mass == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(p.translation_x < 1e-9);
  CHECK(p.translation_y < 1e-9);
  CHECK(p.marginal_defect < 1e-9);
}

TEST_CASE("Monte Carlo skeleton measure is close to Q") {
  const IsotropicMixture mix = isotropic_grid(2, 2);
  SkeletonOptions opt;
  opt.mode = SkeletonMode::MonteCarlo;
  opt.samples = 4000;
  opt.seed = 3;
  const SkeletonMeasure s = skeleton_measure(mix, 8, 2, opt);
  CHECK(s.samples == 4000);
  CHECK(nu_s_defect(s, mix.mean()) < 0.2);
}

TEST_CASE("drift law of large numbers on a moderate torus") {
  const TransportMeasure q =
      repair_irreducible(drift_measure(2, {0.25, 0.0}, {DriftBasis::AxisAligned, 0.0}), 0.1);
  const LlnReport r = drift_lln_check(q, 64, 100, 1);
  CHECK(r.replicas == 100);
  CHECK(r.distance < 0.05);
}

TEST_CASE("standardize mixes with the uniform flow") {
  const int n = 4;
  const FlowVolume f1 = FlowVolume::Constant(32, 0.4);
  const FlowVolume f2 = FlowVolume::Constant(32, 0.05);
  const StandardizeResult r = standardize(f1, f2, 0.5, 0.1, n);
  CHECK(r.lambda == doctest::Approx(0.2 / 0.35));
  CHECK(r.flow.maxCoeff() <= 0.4 + 1e-12);
  CHECK_THROWS(standardize(f1, f2, 0.5, 0.3, n));
  const StandardizeResult tiny = standardize(f1, FlowVolume::Zero(32), 0.5, 1e-12, n);
  CHECK((tiny.flow - f1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("smoothing width") {
  CHECK(default_smoothing_width(8) == 1);
  CHECK(default_smoothing_width(16) == 3);
  CHECK(default_smoothing_width(32) == 5);
  CHECK(default_smoothing_width(40) == 5);
}

TEST_CASE("assembly demands carry mass N in every step") {
  const IsotropicMixture mix = isotropic_grid(2, 2);
  const int n = 8, m = 2, squares = 16;
  for (bool reweight : {false, true}) {
    const AssemblyDemands d = assembly_demands(mix, n, m, 1, reweight);
    CHECK(d.law.sum() == doctest::Approx(1.0));
    CHECK(squares * d.rho1.sum() == doctest::Approx(n));
    CHECK(squares * d.d3.sum() == doctest::Approx(n));
    CHECK(squares * d.d4.sum() == doctest::Approx(n));
  }
}

TEST_CASE("without reweighting the crossing demand is the mixture mean") {
  const IsotropicMixture mix = isotropic_grid(4, 2);
  const AssemblyDemands d = assembly_demands(mix, 16, 4, 3, false);
  CHECK((d.cross - mix.mean().mass).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(d.d4.maxCoeff() - d.d4.minCoeff() < 1e-15);
}

TEST_CASE("assembled flow dominates the optimum and is feasible") {
  const IsotropicMixture mix = isotropic_grid(2, 2);
  SolverConfig cfg;
  const Environment env = sample_torus_env(8, CostDistribution::uniform(1.0), 2);
  const AssemblyResult a = assemble_global(8, 2, env, mix, 1, cfg);
  CHECK(a.feasible);
  CHECK(a.flow.maxCoeff() <= cfg.cap * (1 + 1e-12));
  CHECK(a.half_edge_mismatch < 1e-9);
  const SolveResult opt = solve_global(8, env, cfg);
  CHECK(a.cost >= opt.objective - opt.gap);
  // Standardized flows all carry the same total volume before repair.
  const FlowVolume raw = a.step1 + a.step2 + a.step3 + a.step4;
  CHECK(raw.sum() >= uniform_flow(8).volume.sum() - 1e-9);
}

TEST_CASE("assembly rejects bad parameters") {
  const IsotropicMixture mix = isotropic_grid(2, 2);
  const Environment env = sample_torus_env(8, CostDistribution::constant(1.0), 1);
  CHECK_THROWS(assemble_global(8, 2, env, mix, 2, SolverConfig{}));
  CHECK_THROWS(assemble_global(8, 4, env, mix, 1, SolverConfig{}));
}
