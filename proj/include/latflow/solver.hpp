#pragma once

#include "latflow/environment.hpp"
#include "latflow/flow.hpp"
#include "latflow/lattice.hpp"
#include "latflow/transport.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace latflow {

enum class CapacityMode { Penalty, IgnoreIfSlack };
enum class FwVariant { Plain, Away, Pairwise };

struct SolverConfig {
  double cap = 0.5;
  double tol = 1e-5; // relative certified gap
  int max_iter = 2000; // oracle sweeps
  CapacityMode capacity = CapacityMode::IgnoreIfSlack;
  double penalty_weight = 3.0;
  double penalty_growth = 2.0;
  int penalty_rounds = 50;
  FwVariant variant = FwVariant::Pairwise;
  double weight_floor = 1e-15;
  int max_n = 64;
  int oracle_length_cap = 12;
  long oracle_path_budget = 200000;
  bool compute_residual = true;
  // Oracle-free re-optimization passes over the stored atoms per sweep.
  int inner_passes = 4;
};

std::string to_string(CapacityMode m);
std::string to_string(FwVariant v);
CapacityMode parse_capacity_mode(const std::string &s);
FwVariant parse_fw_variant(const std::string &s);

/// One source with its demands. An empty demand list together with a
/// positive uniform_demand means "uniform_demand to every vertex".
struct Commodity {
  int source = 0;
  std::vector<std::pair<int, double>> demands;
  double uniform_demand = 0.0;
};

/// A fixed flow that may enter the convex combination, with its split by
/// commodity (needed for the Waldrop residual).
struct FixedFlow {
  std::string name;
  FlowVolume volume;
  // Returns w . x^s for commodity index s.
  std::function<double(int, const Eigen::VectorXd &)> commodity_dot;
  std::function<FlowVolume(int)> commodity_volume;
};

struct FlowProblem {
  const Graph *graph = nullptr;
  Eigen::VectorXd cost;
  std::vector<Commodity> commodities;
  std::vector<FixedFlow> fixed;
  // Index into `fixed` used for feasibility repair; -1 if none.
  int repair_reference = -1;
  // Index into `fixed` used as the starting point; -1 starts from the
  // cheapest-path assignment under the cost factors.
  int start_fixed = -1;

  double total_demand(int commodity) const;
};

/// Volume of one commodity on one routing, sorted by edge id.
struct SparseVolume {
  std::vector<int> edge;
  std::vector<double> value;

  double dot(const Eigen::VectorXd &w) const;
  bool operator==(const SparseVolume &) const = default;
};

SparseVolume sparse_volume(const FlowVolume &v);

/// One routing of a single commodity: a shortest-path tree (fixed = -1) or
/// that commodity's share of a fixed flow.
struct Atom {
  SparseVolume volume;
  int fixed = -1;
  double alpha = 0.0;
};

/// Per-commodity convex combinations; blocks[k] holds commodity k.
struct Decomposition {
  int num_edges = 0;
  std::vector<std::vector<Atom>> blocks;

  FlowVolume flow() const;
  FlowVolume commodity_flow(int k) const;
  std::size_t atom_count() const;
};

struct TraceEntry {
  int iteration;
  double penalized;
  double fw_gap;
  double lower_bound;
  double objective; // after repair
  double penalty;
};

struct SolveResult {
  FlowVolume flow;
  double objective = 0.0;
  double gap = 0.0; // objective - lower_bound, >= 0
  double lower_bound = 0.0;
  double fw_gap = 0.0;
  double max_volume = 0.0;
  double max_violation = 0.0;
  double pre_repair_violation = 0.0;
  double repair_lambda = 0.0;
  double waldrop_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;
  double walltime = 0.0;
  std::vector<TraceEntry> trace;
  std::shared_ptr<const Decomposition> decomposition;
};

struct SolveOptions {
  // Decomposition from an earlier solve of the same commodities; the result is
  // never worse than this starting point.
  std::shared_ptr<const Decomposition> warm_start;
};

// Shortest-path tree from `source`. Ties go to the lower edge id.
struct ShortestPathTree {
  std::vector<double> dist;
  std::vector<int> parent_edge; // -1 at source or unreachable
  std::vector<int> order;       // settle order
};
ShortestPathTree shortest_path_tree(const Graph &g, const Eigen::VectorXd &w, int source);

// All-or-nothing assignment of every commodity under weights w.
FlowVolume all_or_nothing(const FlowProblem &p, const Eigen::VectorXd &w);

// Generic engine: minimizes sum c f^2 subject to f <= cap over convex
// combinations of shortest-path assignments.
SolveResult frank_wolfe(const FlowProblem &p, const SolverConfig &cfg,
                        const SolveOptions &opts = {});

FlowProblem global_problem(const Torus &torus, const Environment &env);
FlowProblem local_problem(const ExtendedSquare &sq, const Environment &env,
                          const TransportMeasure &q);

SolveResult solve_global(int n, const Environment &env, const SolverConfig &cfg,
                         const SolveOptions &opts = {});
SolveResult solve_local(int m, const Environment &env, const TransportMeasure &q,
                        const SolverConfig &cfg, const SolveOptions &opts = {});

// Marginal edge weight 2 c f + penalty gradient, floored.
Eigen::VectorXd marginal_weights(const Eigen::VectorXd &cost, const FlowVolume &f, double cap,
                                 double penalty, double floor);

// Max over commodities of (w . x^s - min-weight routing cost) per unit demand.
double waldrop_residual(const FlowProblem &p, const std::vector<FlowVolume> &per_commodity,
                        const Eigen::VectorXd &w);
double waldrop_residual(const FlowProblem &p, const Decomposition &d, const Eigen::VectorXd &w);
std::vector<FlowVolume> per_commodity_volumes(const FlowProblem &p, const Decomposition &d);

// Necessary condition: every boundary half-edge can carry what enters and
// leaves through it.
bool local_cap_admissible(const TransportMeasure &q, double cap);
// Max edge volume of the Lemma 9 router for q; sufficient for feasibility.
double lemma9_probe(const TransportMeasure &q);

/// Ground truth for tiny squares: enumerate simple boundary-to-boundary
/// paths, then minimize over path weights by accelerated projected gradient.
SolveResult brute_force_local(int m, const Environment &env, const TransportMeasure &q,
                              const SolverConfig &cfg);

} // namespace latflow
