#include "cli.hpp"

#include "latflow/construction.hpp"
#include "latflow/experiments.hpp"
#include "latflow/io.hpp"
#include "latflow/rng.hpp"
#include "latflow/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace latflow {
namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNotConverged = 2;

struct SolverOptions {
  SolverConfig d;
  double tol = d.tol;
  int max_iter = d.max_iter;
  std::string capacity = to_string(d.capacity);
  std::string variant = to_string(d.variant);
  double penalty_weight = d.penalty_weight;
  double penalty_growth = d.penalty_growth;
  int penalty_rounds = d.penalty_rounds;
  int inner_passes = d.inner_passes;
  int max_n = d.max_n;
  bool residual = d.compute_residual;
};

struct Options {
  std::string out = "out";
  std::uint64_t seed = 0;
  int threads = 0;
  bool timings = false;
  SolverOptions solver;

  int n = 0;
  int m = 0;
  double b = 0.5;
  std::string dist = "uniform:1";
  std::string env_file;
  std::string q_file;
  bool oracle = false;
  int n_env = 50;
  int n_samples = 200;
  int audit = 100;
  int grid = 2;
  double eps0 = 1e-3;
  double cm_eps0 = 0.0;
  double repair_eps = 0.0;
  std::string mode = "exact";
  long samples = 100000;
  double budget = 1e8;
  int lln_replicas = 0;
  int l = 0;
  bool compare = true;
  double cstar = 1.0;
  std::vector<int> n_list;
  std::vector<int> m_list;
  std::vector<int> grids;
  std::vector<double> b_list;
  std::vector<double> p_list;
  std::vector<double> lambdas;
};

void add_solver_options(CLI::App *sub, SolverOptions &s) {
  sub->add_option("--tol", s.tol, "relative certified gap")->capture_default_str();
  sub->add_option("--max-iter", s.max_iter, "oracle sweep limit")->capture_default_str();
  sub->add_option("--capacity", s.capacity, "penalty | ignore-if-slack")->capture_default_str();
  sub->add_option("--variant", s.variant, "plain | away | pairwise")->capture_default_str();
  sub->add_option("--penalty-weight", s.penalty_weight)->capture_default_str();
  sub->add_option("--penalty-growth", s.penalty_growth)->capture_default_str();
  sub->add_option("--penalty-rounds", s.penalty_rounds)->capture_default_str();
  sub->add_option("--inner-passes", s.inner_passes, "oracle-free passes per sweep")
      ->capture_default_str();
  sub->add_option("--max-n", s.max_n, "largest torus the solver accepts")->capture_default_str();
  sub->add_option("--residual", s.residual, "compute the Waldrop residual")->capture_default_str();
}

class Run {
public:
  explicit Run(const Options &o) : o_(o) {}

  std::vector<std::string> errors;

  SolverConfig solver(double cap) {
    SolverConfig c;
    c.cap = cap;
    c.tol = o_.solver.tol;
    c.max_iter = o_.solver.max_iter;
    c.penalty_weight = o_.solver.penalty_weight;
    c.penalty_growth = o_.solver.penalty_growth;
    c.penalty_rounds = o_.solver.penalty_rounds;
    c.inner_passes = o_.solver.inner_passes;
    c.max_n = o_.solver.max_n;
    c.compute_residual = o_.solver.residual;
    try {
      c.capacity = parse_capacity_mode(o_.solver.capacity);
    } catch (const std::exception &e) {
      errors.push_back(std::string("capacity: ") + e.what());
    }
    try {
      c.variant = parse_fw_variant(o_.solver.variant);
    } catch (const std::exception &e) {
      errors.push_back(std::string("variant: ") + e.what());
    }
    if (!(c.tol > 0.0))
      errors.push_back("tol: must be positive");
    if (c.max_iter < 1)
      errors.push_back("max-iter: must be positive");
    if (c.inner_passes < 0)
      errors.push_back("inner-passes: must be nonnegative");
    return c;
  }

  std::optional<CostDistribution> dist(const std::string &key = "dist") {
    try {
      return CostDistribution::parse(o_.dist);
    } catch (const std::exception &e) {
      errors.push_back(key + ": " + e.what());
      return std::nullopt;
    }
  }

  void positive(const std::string &key, double v) {
    if (!(v > 0))
      errors.push_back(key + ": must be positive");
  }
  void global_cap(double b, int n) {
    if (b < 0.25)
      errors.push_back("b: B must exceed 1/4");
    else if (b == 0.25 && n % 2 != 0)
      errors.push_back("b: B = 1/4 is only allowed for even N");
  }
  void divides(int m, int n) {
    if (m < 1 || n < 1 || n % m != 0)
      errors.push_back("m: M must divide N (M=" + std::to_string(m) + ", N=" + std::to_string(n) +
                       ")");
  }
  void nonempty(const std::string &key, std::size_t size) {
    if (size == 0)
      errors.push_back(key + ": list must not be empty");
  }

  template <class F> std::optional<std::invoke_result_t<F, std::istream &>> load(const std::string &key,
                                                                              const std::string &path,
                                                                              F reader) {
    std::ifstream in(path);
    if (!in) {
      errors.push_back(key + ": cannot open '" + path + "'");
      return std::nullopt;
    }
    try {
      return reader(in);
    } catch (const std::exception &e) {
      errors.push_back(key + ": " + e.what());
      return std::nullopt;
    }
  }

private:
  const Options &o_;
};

// Collects written files for the manifest.
class Outputs {
public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  template <class F> void write(const std::string &name, F body) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os)
      throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(os);
    os.close();
    files_.push_back(name);
  }
  void text(const std::string &name, const std::string &s) {
    write(name, [&](std::ostream &os) { os << s; });
  }
  const std::vector<std::string> &files() const { return files_; }
  const fs::path &dir() const { return dir_; }

private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_report(Outputs &out, const ExperimentReport &rep) {
  out.write(rep.experiment + ".csv", [&](std::ostream &os) { write_csv(os, rep.rows); });
  out.text("summary.json", summary_json(rep));
}

ResultRow solve_row(const std::string &exp, int n, int m, double b, std::uint64_t seed,
                    const SolveResult &r, bool timings) {
  ResultRow row;
  row.experiment = exp;
  row.n = n;
  row.m = m;
  row.b = b;
  row.seed = seed;
  row.objective = r.objective;
  row.gap = r.gap;
  row.residual = r.waldrop_residual;
  if (timings)
    row.walltime = r.walltime;
  row.extra = {{"lower_bound", r.lower_bound},
               {"max_volume", r.max_volume},
               {"repair_lambda", r.repair_lambda},
               {"iterations", r.iterations},
               {"converged", r.converged ? 1.0 : 0.0},
               {"infeasible", r.infeasible ? 1.0 : 0.0}};
  return row;
}

ExperimentReport single_report(const std::string &exp, ResultRow row, bool converged) {
  ExperimentReport rep;
  rep.experiment = exp;
  rep.all_converged = converged;
  rep.put("objective", row.objective);
  rep.put("gap", row.gap);
  rep.put("residual", row.residual);
  for (const auto &[k, v] : row.extra)
    rep.put(k, v);
  rep.rows.push_back(std::move(row));
  return rep;
}

} // namespace

int run_cli(int argc, const char *const *argv) {
  const auto t0 = std::chrono::steady_clock::now();
  Options o;
  bool seed_given = false;
  CLI::App app{"latflow: minimum-cost multicommodity flows on the torus and on squares"};
  app.set_config("--config", "", "INI file; [section] per subcommand");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  auto *seed_opt = app.add_option("--seed", o.seed, "global seed");
  app.add_option("--threads", o.threads, "worker threads, 0 = all cores")->capture_default_str();
  app.add_flag("--timings", o.timings, "fill walltime columns (breaks byte-identical output)");

  auto sub = [&](const char *name, const char *help) { return app.add_subcommand(name, help); };

  auto *sg = sub("solve-global", "optimal standardized global flow on the N x N torus");
  sg->add_option("--n", o.n, "torus size")->required();
  sg->add_option("--b", o.b, "edge capacity B")->capture_default_str();
  sg->add_option("--dist", o.dist, "cost law, e.g. uniform:1")->capture_default_str();
  sg->add_option("--env", o.env_file, "environment file instead of sampling");
  add_solver_options(sg, o.solver);

  auto *sl = sub("solve-local", "optimal flow on the extended M x M square for a given Q");
  sl->add_option("--m", o.m, "square size")->required();
  sl->add_option("--q", o.q_file, "transportation measure file")->required();
  sl->add_option("--b", o.b)->capture_default_str();
  sl->add_option("--dist", o.dist)->capture_default_str();
  sl->add_option("--env", o.env_file, "environment file instead of sampling");
  sl->add_flag("--oracle", o.oracle, "use the brute-force path enumeration");
  add_solver_options(sl, o.solver);

  auto *bs = sub("build-skeleton", "skeleton chain measure for a grid mixture");
  bs->add_option("--n", o.n)->required();
  bs->add_option("--m", o.m)->required();
  bs->add_option("--grid", o.grid, "mixture grid G")->capture_default_str();
  bs->add_option("--eps0", o.eps0, "weight of the all-pairs component")->capture_default_str();
  bs->add_option("--repair-eps", o.repair_eps, "extra irreducibility mixing, 0 = none")
      ->capture_default_str();
  bs->add_option("--mode", o.mode, "exact | monte-carlo")->capture_default_str();
  bs->add_option("--samples", o.samples)->capture_default_str();
  bs->add_option("--budget", o.budget, "exact-mode operation budget")->capture_default_str();
  bs->add_option("--lln-replicas", o.lln_replicas, "drift LLN replicas per component, 0 = skip")
      ->capture_default_str();

  auto *as = sub("assemble", "four-step construction of a global flow from local flows");
  as->add_option("--n", o.n)->required();
  as->add_option("--m", o.m)->required();
  as->add_option("--b", o.b)->capture_default_str();
  as->add_option("--dist", o.dist)->capture_default_str();
  as->add_option("--env", o.env_file);
  as->add_option("--grid", o.grid)->capture_default_str();
  as->add_option("--eps0", o.eps0)->capture_default_str();
  as->add_option("--l", o.l, "smoothing width L, 0 = default")->capture_default_str();
  as->add_option("--compare", o.compare, "also run solve-global")->capture_default_str();
  add_solver_options(as, o.solver);

  auto *eg = sub("estimate-gamma", "N^-2 mean optimal global cost over N");
  eg->add_option("--n-list", o.n_list)->required()->delimiter(',');
  eg->add_option("--b", o.b)->capture_default_str();
  eg->add_option("--dist", o.dist)->capture_default_str();
  eg->add_option("--n-env", o.n_env)->capture_default_str();
  add_solver_options(eg, o.solver);

  auto *ec = sub("estimate-cm", "upper estimate of c_{M,B}");
  ec->add_option("--m", o.m)->required();
  ec->add_option("--b", o.b)->capture_default_str();
  ec->add_option("--dist", o.dist)->capture_default_str();
  ec->add_option("--grids", o.grids, "candidate grid sizes")->delimiter(',');
  ec->add_option("--eps0", o.cm_eps0, "all-pairs weight of each candidate")->capture_default_str();
  ec->add_option("--n-env", o.n_env)->capture_default_str();
  add_solver_options(ec, o.solver);

  auto *co = sub("concentration", "lower-tail check of the local cost");
  co->add_option("--m", o.m)->required();
  co->add_option("--b", o.b)->capture_default_str();
  co->add_option("--dist", o.dist)->capture_default_str();
  co->add_option("--q", o.q_file, "measure file; default is the grid mixture mean, scaled to fit B");
  co->add_option("--grid", o.grid)->capture_default_str();
  co->add_option("--n-samples", o.n_samples)->capture_default_str();
  co->add_option("--lambdas", o.lambdas)->delimiter(',');
  co->add_option("--audit", o.audit, "single-edge resamples")->capture_default_str();
  add_solver_options(co, o.solver);

  auto *bw = sub("b-sweep", "paired objectives over capacities");
  bw->add_option("--n", o.n)->required();
  bw->add_option("--dist", o.dist)->capture_default_str();
  bw->add_option("--b-list", o.b_list)->required()->delimiter(',');
  bw->add_option("--n-env", o.n_env)->capture_default_str();
  add_solver_options(bw, o.solver);

  auto *pc = sub("percolation", "two-point environments over P(c = 0)");
  pc->add_option("--n", o.n)->required();
  pc->add_option("--b", o.b)->capture_default_str();
  pc->add_option("--p-list", o.p_list)->required()->delimiter(',');
  pc->add_option("--cstar", o.cstar)->capture_default_str();
  pc->add_option("--n-env", o.n_env)->capture_default_str();
  add_solver_options(pc, o.solver);

  auto *sn = sub("slln", "deviation frequencies of the global cost");
  sn->add_option("--n", o.n)->required();
  sn->add_option("--b", o.b)->capture_default_str();
  sn->add_option("--dist", o.dist)->capture_default_str();
  sn->add_option("--n-env", o.n_env)->capture_default_str();
  sn->add_option("--lambdas", o.lambdas)->delimiter(',');
  add_solver_options(sn, o.solver);

  auto *lm = sub("lemma15", "c_{M,B} increments over M");
  lm->add_option("--m-list", o.m_list)->required()->delimiter(',');
  lm->add_option("--b", o.b)->capture_default_str();
  lm->add_option("--dist", o.dist)->capture_default_str();
  lm->add_option("--grids", o.grids)->delimiter(',');
  lm->add_option("--n-env", o.n_env)->capture_default_str();
  add_solver_options(lm, o.solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kConfigError;
  }
  seed_given = seed_opt->count() > 0;
  const CLI::App *active = app.get_subcommands().front();
  const std::string cmd = active->get_name();
  if (o.grids.empty())
    o.grids = {1, 2, 4};

#ifdef _OPENMP
  if (o.threads > 0)
    omp_set_num_threads(o.threads);
#endif

  Run run(o);
  const RunOptions ropt{o.timings};
  auto need_seed = [&](bool stochastic) {
    if (stochastic && !seed_given)
      run.errors.push_back("seed: required for stochastic runs");
  };

  fs::path dir(o.out);
  Outputs out(dir);
  int code = kOk;
  auto fail_config = [&]() {
    for (const auto &e : run.errors)
      std::cerr << "config error: " << e << '\n';
    return kConfigError;
  };

  try {
    std::error_code ec_dir;
    // Validation before any output is written.
    if (cmd == "solve-global") {
      const SolverConfig cfg = run.solver(o.b);
      run.global_cap(o.b, o.n);
      if (o.n < 2)
        run.errors.push_back("n: N must be at least 2");
      std::optional<Environment> env;
      if (!o.env_file.empty()) {
        env = run.load("env", o.env_file, read_environment);
        if (env && (env->kind() != EnvironmentKind::Torus || env->size() != o.n))
          run.errors.push_back("env: file is not an N x N torus environment");
      } else {
        need_seed(true);
        if (auto d = run.dist(); d && run.errors.empty())
          env = sample_torus_env(o.n, *d, o.seed);
      }
      if (!run.errors.empty())
        return fail_config();
      fs::create_directories(dir, ec_dir);
      const SolveResult r = solve_global(o.n, *env, cfg);
      auto rep = single_report(cmd, solve_row(cmd, o.n, 0, o.b, o.seed, r, o.timings), r.converged);
      write_report(out, rep);
      out.write("environment.txt", [&](std::ostream &os) { write_environment(os, *env); });
      out.write("flow.txt", [&](std::ostream &os) {
        write_flow(os, {EnvironmentKind::Torus, o.n, r.flow});
      });
      code = r.converged ? kOk : kNotConverged;
    } else if (cmd == "solve-local") {
      const SolverConfig cfg = run.solver(o.b);
      run.positive("b", o.b);
      auto q = run.load("q", o.q_file, read_transport);
      if (q && q->m != o.m)
        run.errors.push_back("q: measure size differs from M");
      std::optional<Environment> env;
      if (!o.env_file.empty()) {
        env = run.load("env", o.env_file, read_environment);
        if (env && (env->kind() != EnvironmentKind::Square || env->size() != o.m))
          run.errors.push_back("env: file is not an M x M square environment");
      } else {
        need_seed(true);
        if (auto d = run.dist(); d && run.errors.empty())
          env = sample_square_env(o.m, *d, o.seed);
      }
      if (!run.errors.empty())
        return fail_config();
      fs::create_directories(dir, ec_dir);
      const SolveResult r =
          o.oracle ? brute_force_local(o.m, *env, *q, cfg) : solve_local(o.m, *env, *q, cfg);
      auto rep = single_report(cmd, solve_row(cmd, 0, o.m, o.b, o.seed, r, o.timings),
                               r.converged);
      write_report(out, rep);
      out.write("environment.txt", [&](std::ostream &os) { write_environment(os, *env); });
      out.write("flow.txt", [&](std::ostream &os) {
        write_flow(os, {EnvironmentKind::Square, o.m, r.flow});
      });
      code = r.converged ? kOk : kNotConverged;
    } else if (cmd == "build-skeleton") {
      run.divides(o.m, o.n);
      if (o.grid < 1)
        run.errors.push_back("grid: must be at least 1");
      if (o.mode != "exact" && o.mode != "monte-carlo")
        run.errors.push_back("mode: expected exact or monte-carlo");
      if (o.eps0 < 0.0)
        run.errors.push_back("eps0: must be nonnegative");
      if (o.repair_eps < 0.0 || o.repair_eps > 1.0)
        run.errors.push_back("repair-eps: must lie in [0, 1]");
      need_seed(o.mode == "monte-carlo" || o.lln_replicas > 0);
      if (!run.errors.empty())
        return fail_config();
      IsotropicMixture mix = isotropic_grid(o.m, o.grid, {DriftBasis::MinimalDisplacement, o.eps0});
      if (o.repair_eps > 0.0)
        for (auto &c : mix.components)
          c.q = repair_irreducible(c.q, o.repair_eps);
      SkeletonOptions sopt;
      sopt.mode = o.mode == "exact" ? SkeletonMode::Exact : SkeletonMode::MonteCarlo;
      sopt.samples = o.samples;
      sopt.seed = o.seed;
      sopt.budget = o.budget;
      fs::create_directories(dir, ec_dir);
      const SkeletonMeasure s = skeleton_measure(mix, o.n, o.m, sopt);
      const Properties3Report p3 = properties3(s);
      const TransportMeasure q0 = mix.mean();
      ExperimentReport rep;
      rep.experiment = cmd;
      rep.put("total_mass", p3.total_mass);
      rep.put("translation_x", p3.translation_x);
      rep.put("translation_y", p3.translation_y);
      rep.put("marginal_defect", p3.marginal_defect);
      rep.put("nu_s_defect", nu_s_defect(s, q0));
      rep.put("tv_grid", s.tv_grid);
      rep.put("tv_uniform", s.tv_uniform);
      for (std::size_t k = 0; k < mix.components.size(); ++k) {
        const SkeletonChain c = build_chain(mix.components[k].q, o.n, o.m);
        ResultRow row;
        row.experiment = cmd;
        row.n = o.n;
        row.m = o.m;
        row.seed = o.seed;
        row.extra = {{"component", double(k)},
                     {"weight", mix.components[k].weight},
                     {"target_x", mix.components[k].target[0]},
                     {"target_y", mix.components[k].target[1]},
                     {"t", c.t},
                     {"stationarity_defect", stationarity_defect(c)},
                     {"irreducible", check_irreducible(projection(c)) ? 1.0 : 0.0}};
        if (o.lln_replicas > 0) {
          const LlnReport l = drift_lln_check(mix.components[k].q, o.n, o.lln_replicas,
                                              derive_seed(o.seed, k));
          row.extra.push_back({"lln_distance", l.distance});
        }
        rep.rows.push_back(std::move(row));
      }
      write_report(out, rep);
      out.write("q0.txt", [&](std::ostream &os) { write_transport(os, q0); });
      out.write("nu_square0.txt", [&](std::ostream &os) {
        write_transport(os, TransportMeasure(o.m, s.nu_s[0]));
      });
    } else if (cmd == "assemble") {
      const SolverConfig cfg = run.solver(o.b);
      run.divides(o.m, o.n);
      run.global_cap(o.b, o.n);
      const int l = o.l > 0 ? o.l : default_smoothing_width(o.n);
      if (l % 2 == 0 || l > o.n)
        run.errors.push_back("l: L must be odd and at most N");
      std::optional<Environment> env;
      if (!o.env_file.empty()) {
        env = run.load("env", o.env_file, read_environment);
        if (env && (env->kind() != EnvironmentKind::Torus || env->size() != o.n))
          run.errors.push_back("env: file is not an N x N torus environment");
      } else {
        need_seed(true);
        if (auto d = run.dist(); d && run.errors.empty())
          env = sample_torus_env(o.n, *d, o.seed);
      }
      if (!run.errors.empty())
        return fail_config();
      fs::create_directories(dir, ec_dir);
      const IsotropicMixture mix =
          isotropic_grid(o.m, o.grid, {DriftBasis::MinimalDisplacement, o.eps0});
      const AssemblyResult a = assemble_global(o.n, o.m, *env, mix, l, cfg);
      ResultRow row;
      row.experiment = cmd;
      row.n = o.n;
      row.m = o.m;
      row.b = o.b;
      row.seed = o.seed;
      row.objective = a.cost;
      row.extra = {{"w_n", a.w_n},
                   {"l_n", double(a.l_n)},
                   {"max_before_repair", a.max_before_repair},
                   {"repair_lambda", a.repair_lambda},
                   {"local_total", a.local_total},
                   {"target", a.target},
                   {"half_edge_mismatch", a.half_edge_mismatch},
                   {"local_failures", double(a.local_failures)},
                   {"local_relaxed", double(a.local_relaxed)},
                   {"feasible", a.feasible ? 1.0 : 0.0}};
      bool converged = a.local_failures == 0;
      if (o.compare) {
        const SolveResult r = solve_global(o.n, *env, cfg);
        row.gap = r.gap;
        row.extra.push_back({"optimum", r.objective});
        row.extra.push_back({"optimum_gap", r.gap});
        row.extra.push_back({"ratio", a.cost / r.objective});
        row.extra.push_back({"dominates", a.cost >= r.objective - r.gap ? 1.0 : 0.0});
        converged = converged && r.converged;
      }
      auto rep = single_report(cmd, row, converged);
      write_report(out, rep);
      out.write("flow.txt", [&](std::ostream &os) {
        write_flow(os, {EnvironmentKind::Torus, o.n, a.flow});
      });
      code = converged ? kOk : kNotConverged;
    } else {
      // Experiments.
      std::optional<CostDistribution> d;
      if (cmd != "percolation")
        d = run.dist();
      const SolverConfig cfg = run.solver(o.b);
      need_seed(true);
      if (cmd != "b-sweep" && cmd != "estimate-gamma")
        run.positive("b", o.b);
      if (o.n_env < 1)
        run.errors.push_back("n-env: must be at least 1");
      std::optional<TransportMeasure> q;
      if (cmd == "estimate-gamma") {
        run.nonempty("n-list", o.n_list.size());
        for (int n : o.n_list)
          run.global_cap(o.b, n);
      } else if (cmd == "estimate-cm") {
        run.nonempty("grids", o.grids.size());
      } else if (cmd == "concentration") {
        if (o.n_samples < 2)
          run.errors.push_back("n-samples: must be at least 2");
        if (!o.q_file.empty()) {
          q = run.load("q", o.q_file, read_transport);
          if (q && q->m != o.m)
            run.errors.push_back("q: measure size differs from M");
        } else if (o.m >= 1 && o.grid >= 1) {
          // Scaled so that the one-turn router fits under 0.9 B.
          TransportMeasure mean = isotropic_grid(o.m, o.grid, {DriftBasis::MinimalDisplacement, 0.0}).mean();
          q = std::min(1.0, 0.9 * o.b / lemma9_probe(mean)) * mean;
        }
      } else if (cmd == "b-sweep") {
        run.nonempty("b-list", o.b_list.size());
        for (double b : o.b_list)
          run.global_cap(b, o.n);
      } else if (cmd == "percolation") {
        run.nonempty("p-list", o.p_list.size());
        for (double p : o.p_list)
          if (!(p >= 0.0 && p <= 1.0))
            run.errors.push_back("p-list: probabilities must lie in [0, 1]");
        run.positive("cstar", o.cstar);
        run.global_cap(o.b, o.n);
      } else if (cmd == "slln") {
        run.global_cap(o.b, o.n);
      } else if (cmd == "lemma15") {
        if (o.m_list.size() < 2)
          run.errors.push_back("m-list: need at least two values");
        for (std::size_t k = 1; k < o.m_list.size(); ++k)
          if (o.m_list[k] <= o.m_list[k - 1])
            run.errors.push_back("m-list: values must increase");
      }
      if (!run.errors.empty())
        return fail_config();
      fs::create_directories(dir, ec_dir);
      ExperimentReport rep;
      if (cmd == "estimate-gamma")
        rep = estimate_gamma(o.n_list, o.b, *d, o.n_env, o.seed, cfg, ropt);
      else if (cmd == "estimate-cm")
        rep = estimate_cM(o.m, o.b, *d, o.grids, o.n_env, o.seed, cfg,
                          {DriftBasis::MinimalDisplacement, o.cm_eps0}, ropt);
      else if (cmd == "concentration")
        rep = concentration_experiment(o.m, o.b, *q, *d, o.n_samples, o.lambdas, o.seed, cfg,
                                       o.audit, ropt);
      else if (cmd == "b-sweep")
        rep = b_sweep(o.n, *d, o.b_list, o.n_env, o.seed, cfg, ropt);
      else if (cmd == "percolation")
        rep = percolation_probe(o.n, o.b, o.p_list, o.cstar, o.n_env, o.seed, cfg, ropt);
      else if (cmd == "slln")
        rep = slln_check(o.n, o.b, *d, o.n_env, o.lambdas, o.seed, cfg, ropt);
      else
        rep = lemma15_probe(o.m_list, o.b, *d, o.grids, o.n_env, o.seed, cfg, ropt);
      write_report(out, rep);
      code = rep.all_converged ? kOk : kNotConverged;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  if (code == kNotConverged)
    std::cerr << "warning: at least one solve did not reach the requested gap\n";

  nlohmann::ordered_json man;
  man["tool"] = "latflow";
  man["version"] = LATFLOW_VERSION;
  man["subcommand"] = cmd;
  man["seed"] = o.seed;
  man["rng"] = std::string(kRngVersion);
  man["config"] = app.config_to_str(true, false);
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  for (const auto &f : out.files())
    files[f] = file_hash(dir / f);
  man["outputs"] = files;
  man["hash"] = "fnv1a64";
  man["exit_code"] = code;
  man["walltime_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream(dir / "manifest.json") << man.dump(2) << '\n';
  return code;
}

} // namespace latflow
