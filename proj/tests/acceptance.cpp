// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include "cli.hpp"
#include "latflow/construction.hpp"
#include "latflow/experiments.hpp"
#include "latflow/solver.hpp"
#include "router_checks.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace latflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Outcome constant_optimum() {
  SolverConfig cfg;
  double worst = 0.0;
  for (int n : {4, 8}) {
    const Environment env = sample_torus_env(n, CostDistribution::constant(1.0), 1);
    const SolveResult r = solve_global(n, env, cfg);
    worst = std::max(worst, rel(r.objective / (n * n), 0.125));
  }
  return {worst <= 1e-3, fmt("max relative error %.3g", worst)};
}

Outcome forced_flow() {
  SolverConfig cfg;
  cfg.cap = 0.25;
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    const Environment env =
        sample_torus_env(4, CostDistribution::uniform(1.0), replicate_seed(21, r));
    worst = std::max(worst, rel(solve_global(4, env, cfg).objective, env.cost().sum() / 16.0));
  }
  return {worst <= 1e-6, fmt("max relative error %.3g over 20 environments", worst)};
}

Outcome oracle_equivalence() {
  SolverConfig cfg;
  cfg.cap = 2.0;
  cfg.tol = 1e-7;
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    const TransportMeasure q =
        test::fit_under(test::random_sparse(2, 0.15, replicate_seed(31, r)), 2.0);
    const Environment env =
        sample_square_env(2, CostDistribution::uniform(1.0), replicate_seed(32, r));
    const SolveResult fw = solve_local(2, env, q, cfg);
    const SolveResult bf = brute_force_local(2, env, q, cfg);
    worst = std::max(worst, rel(fw.objective, bf.objective));
  }
  return {worst <= 1e-5, fmt("max relative difference %.3g over 20 instances", worst)};
}

Outcome uniform_value() {
  int bad = 0;
  for (int n : {3, 4, 5, 10, 11}) {
    const double want = double((n * n) / 2) / (2.0 * n * n);
    const UniformFlow u = uniform_flow(n);
    if (uniform_flow_value(n) != want || u.value != want ||
        (u.volume.array() - want).abs().maxCoeff() > 1e-15)
      ++bad;
  }
  return {bad == 0, fmt("%g of 5 sizes mismatched", bad)};
}

Outcome router_bounds() {
  const test::RouterCheck r = test::check_all_routers();
  std::string d = fmt("%g exact instances, %g failures", r.instances, double(r.failures.size()));
  if (!r.ok())
    d += " (first: " + r.failures.front() + ")";
  return {r.ok(), d};
}

Outcome sandwich() {
  const ExperimentReport rep =
      b_sweep(4, CostDistribution::uniform(1.0), {0.3, 0.5}, 20, 61, SolverConfig{});
  const bool ok = rep.get("monotonicity_violations") == 0 && rep.get("sandwich_violations") == 0;
  return {ok, fmt("%g pairs, %g below zero, %g above the bound", rep.get("pairs"),
                  rep.get("monotonicity_violations"), rep.get("sandwich_violations"))};
}

Outcome skeleton_fidelity() {
  IsotropicMixture mix;
  mix.m = 2;
  mix.grid = 2;
  const Direction dirs[] = {Direction::Right, Direction::Left, Direction::Up, Direction::Down};
  const Eigen::Vector2d targets[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (int k = 0; k < 4; ++k)
    mix.components.push_back({0.25, repair_irreducible(directional(2, dirs[k]), 0.05), targets[k]});
  const SkeletonMeasure s = skeleton_measure(mix, 8, 2);
  const Properties3Report p = properties3(s);
  const double nu = nu_s_defect(s, mix.mean());
  const double worst = std::max({nu, std::abs(p.total_mass - 8.0), p.translation_x,
                                 p.translation_y, p.marginal_defect});
  return {worst <= 1e-9, fmt("nu_S defect %.3g, total mass %.15g, worst defect %.3g", nu,
                             p.total_mass, worst)};
}

Outcome drift_lln() {
  const int m = 2, n = 64 * m;
  const Eigen::Vector2d drifts[] = {{0.25, 0.0}, {0.8, 0.3}, {0.0, 0.6}};
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const TransportMeasure q =
        repair_irreducible(drift_measure(m, drifts[k], {DriftBasis::AxisAligned, 0.0}), 0.05);
    worst = std::max(worst, drift_lln_check(q, n, 100, 80 + k).distance);
  }
  return {worst <= 0.05, fmt("max distance %.3g at N = %g, 100 replicas", worst, n)};
}

Outcome concentration() {
  const TransportMeasure mean = isotropic_grid(6, 2, {DriftBasis::MinimalDisplacement, 0.0}).mean();
  const TransportMeasure q = (0.9 * 0.5 / lemma9_probe(mean)) * mean;
  const ExperimentReport rep = concentration_experiment(6, 0.5, q, CostDistribution::uniform(1.0),
                                                        200, {}, 91, SolverConfig{}, 100);
  int lambdas = 0;
  while (true) {
    try {
      rep.get("lambda" + std::to_string(lambdas) + ".value");
      ++lambdas;
    } catch (const std::out_of_range &) {
      break;
    }
  }
  const bool ok = lambdas == 5 && rep.get("tail_violations") == 0 &&
                  rep.get("audit_violations") == 0 && rep.get("audit_count") == 100;
  return {ok, fmt("%g tail violations over %g lambdas, %g audit violations",
                  rep.get("tail_violations"), lambdas, rep.get("audit_violations"))};
}

Outcome smoothing() {
  const int m = 8, k = 2;
  const double b = 0.5;
  int not_block = 0;
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    TransportMeasure q = test::random_sparse(m, 0.05, replicate_seed(101, r));
    q = (0.99 * b / lemma9_probe(q)) * q; // feasible at B through the router
    const SmoothedMeasure qs = smooth(q, k);
    if (!is_block_constant(qs))
      ++not_block;
    worst = std::max(worst, (drift(qs.q) - drift(q)).lpNorm<1>());
  }
  const double bound = 22.0 * k * b / m;
  return {not_block == 0 && worst <= bound,
          fmt("%g not block constant; max drift change %.3g vs bound %.3g", not_block, worst,
              bound)};
}

Outcome construction() {
  SolverConfig cfg;
  bool dominated = true;
  std::vector<double> ratios;
  for (int n : {8, 16, 32}) {
    const Environment env = sample_torus_env(n, CostDistribution::constant(1.0), 1);
    const AssemblyResult a =
        assemble_global(n, 4, env, isotropic_grid(4, 2), default_smoothing_width(n), cfg);
    const SolveResult opt = solve_global(n, env, cfg);
    dominated = dominated && a.cost >= opt.objective - opt.gap;
    ratios.push_back(a.cost / opt.objective);
  }
  for (int r = 0; r < 3; ++r) {
    const Environment env =
        sample_torus_env(8, CostDistribution::uniform(1.0), replicate_seed(111, r));
    const AssemblyResult a = assemble_global(8, 2, env, isotropic_grid(2, 2), 1, cfg);
    const SolveResult opt = solve_global(8, env, cfg);
    dominated = dominated && a.cost >= opt.objective - opt.gap;
  }
  const bool trend = ratios[1] <= ratios[0] && ratios[2] <= ratios[1];
  return {dominated && trend, fmt("ratios %.4g, %.4g, %.4g at N = 8, 16, 32", ratios[0],
                                  ratios[1], ratios[2]) +
                                  (dominated ? "; dominance holds" : "; dominance violated")};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "latflow");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

Outcome determinism() {
  const std::vector<std::vector<std::string>> runs = {
      {"solve-global", "--n", "6", "--b", "0.3"},
      {"solve-local", "--m", "2", "--b", "2", "--q", "@q"},
      {"build-skeleton", "--n", "8", "--m", "2", "--mode", "monte-carlo", "--samples", "2000"},
      {"assemble", "--n", "8", "--m", "2"},
      {"b-sweep", "--n", "4", "--b-list", "0.3", "0.5", "--n-env", "3"},
      {"concentration", "--m", "3", "--n-samples", "10", "--audit", "3"},
      {"estimate-cm", "--m", "2", "--b", "2", "--grids", "1", "2", "--n-env", "3"},
  };
  const fs::path root = fs::temp_directory_path() / "latflow_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "q.txt") << "latflow-transport 1\nm 2\n"
                                << "0 0 1 0 0 0 0 0\n0 0 0 0 0 0 0 0\n0 0 0 0 0 0 0 0\n"
                                << "0 0 0 0 0 0 0 0\n0 0 0 0 0 0 0 1\n0 0 0 0 0 0 0 0\n"
                                << "0 0 0 0 0 0 0 0\n0 0 0 0 0 0 0 0\n";
  int files = 0, differ = 0, failed = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    fs::path dirs[2];
    for (int k = 0; k < 2; ++k) {
      dirs[k] = root / (std::to_string(r) + "_" + std::to_string(k));
      std::vector<std::string> args{"--out", dirs[k].string(), "--seed", "12"};
      for (const auto &a : runs[r])
        args.push_back(a == "@q" ? (root / "q.txt").string() : a);
      if (cli(args) != 0)
        ++failed;
    }
    for (const auto &e : fs::directory_iterator(dirs[0])) {
      if (e.path().filename() == "manifest.json")
        continue;
      ++files;
      if (slurp(e.path()) != slurp(dirs[1] / e.path().filename()))
        ++differ;
    }
  }
  fs::remove_all(root);
  return {files > 0 && differ == 0 && failed == 0,
          fmt("%g result files compared, %g differ, %g runs failed", files, differ, failed)};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"constant-environment optimum", constant_optimum},
      {"forced-flow identity", forced_flow},
      {"oracle equivalence", oracle_equivalence},
      {"uniform flow value", uniform_value},
      {"router bounds", router_bounds},
      {"capacity sandwich", sandwich},
      {"skeleton fidelity", skeleton_fidelity},
      {"drift law of large numbers", drift_lln},
      {"concentration", concentration},
      {"smoothing", smoothing},
      {"construction dominance and trend", construction},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass)
      ++failures;
    std::printf("criterion %2zu %-34s %s  %s [%.1fs]\n", i + 1, criteria[i].first.c_str(),
                o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
