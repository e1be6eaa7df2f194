#pragma once

// Skeleton Markov chain on the inter-square boundary points, its projection
// onto Bou_M, the endpoint measure it induces on the torus, and the four-step
// assembly of a global flow from local optimal flows.

#include "latflow/environment.hpp"
#include "latflow/flow.hpp"
#include "latflow/lattice.hpp"
#include "latflow/solver.hpp"
#include "latflow/transport.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <vector>

namespace latflow {

/// Directed-state chain for one transportation measure Q on the N x N torus
/// cut into M x M squares. States are indexed as in SkeletonLayout.
struct SkeletonChain {
  int n = 0;
  int m = 0;
  TransportMeasure q;
  Eigen::MatrixXd qbar;                               // Q(b, .) / Q_ent(b); zero rows allowed
  Eigen::SparseMatrix<double, Eigen::RowMajor> q1;    // state -> state
  Eigen::VectorXd pi;                                 // Q_ent(entry) / ((N/M)^2 Q(Bou^2))
  double mass = 0.0;                                  // Q(Bou^2)
  double t = 0.0;                                     // N Q(Bou^2) / M^2
  int t_floor = 0;
  double ceil_weight = 0.0; // probability of running ceil(t) steps
};

// Throws unless Q is in Q_M (L1 defect <= qm_tol), has positive mass, and M | N.
SkeletonChain build_chain(const TransportMeasure &q, int n, int m, double qm_tol = 1e-9);
// || pi Q1 - pi ||_1.
double stationarity_defect(const SkeletonChain &chain);

struct ProjectionChain {
  int m = 0;
  Eigen::MatrixXd qstar; // Q*(b0, b1) = Qbar(b0, reflect(b1))
  Eigen::VectorXd pi_star;
};

ProjectionChain projection(const TransportMeasure &q);
ProjectionChain projection(const SkeletonChain &chain);

// Strong connectivity of the support of a square transition matrix over all
// of its indices.
bool is_irreducible(const Eigen::MatrixXd &transition);
bool check_irreducible(const ProjectionChain &p);

// Irreducible measure with the given real drift:
// |u1| Q(+-x) + |u2| Q(+-y) + all_pairs_measure.
TransportMeasure drift_representative(int m, const Eigen::Vector2d &u);
// (1 - eps) Q + eps drift_representative(drift(Q)); drift is unchanged.
TransportMeasure repair_irreducible(const TransportMeasure &q, double eps);

// Mean step displacement under stationarity, sum pi* Q* g, and its closed
// form M^2 drift(Q) / Q(Bou^2).
Eigen::Vector2d gbar(const ProjectionChain &p);
Eigen::Vector2d gbar_closed_form(const TransportMeasure &q);

struct LlnReport {
  int n = 0;
  double t = 0.0;
  int replicas = 0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();   // mean of N^-1 (Y_t - Y_0)
  Eigen::Vector2d stderr_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d target = Eigen::Vector2d::Zero(); // drift(Q)
  double distance = 0.0;                            // max-norm
};

// Unwrapped skeleton walk of floor/ceil t(N) steps from stationarity.
LlnReport drift_lln_check(const TransportMeasure &q, int n, int replicas, std::uint64_t seed);

// Empirical transition matrix of the projected walk pro(Y) on Bou_M, from a
// single trajectory of the directed-state chain started at stationarity.
Eigen::MatrixXd projected_transition_frequencies(const SkeletonChain &chain, long steps,
                                                 std::uint64_t seed);

enum class SkeletonMode { Exact, MonteCarlo };

struct SkeletonOptions {
  SkeletonMode mode = SkeletonMode::Exact;
  long samples = 100000;
  std::uint64_t seed = 0;
  double budget = 1e8; // refuses exact mode above this operation estimate
  int tv_grid = 0;     // 0: the mixture's grid
};

/// Endpoint measure theta (points x points, total mass N) and per-square
/// step measures nu_S (4M x 4M each) of the mixed skeleton path-flow.
struct SkeletonMeasure {
  int n = 0;
  int m = 0;
  SkeletonMode mode = SkeletonMode::Exact;
  long samples = 0;
  Eigen::MatrixXd theta;
  std::vector<Eigen::MatrixXd> nu_s;
  std::vector<Eigen::MatrixXd> nu_s_stderr; // Monte Carlo only
  int tv_grid = 1;
  double tv_uniform = 0.0; // endpoint displacement law vs uniform, binned
};

// Operation estimate used for the exact-mode budget.
double skeleton_exact_cost(const IsotropicMixture &mix, int n, int m);
SkeletonMeasure skeleton_measure(const IsotropicMixture &mix, int n, int m,
                                 const SkeletonOptions &opt = {});

// TV distance from uniform of the endpoint displacement law (divided by N,
// reduced mod 1) binned on a grid x grid partition of the unit torus. Uses
// the start states of one square; translation invariance covers the rest.
double endpoint_tv(const IsotropicMixture &mix, int n, int m, int grid);

struct Properties3Report {
  double total_mass = 0.0;
  double translation_x = 0.0; // max |theta(shifted) - theta|
  double translation_y = 0.0;
  double marginal_defect = 0.0; // max |theta_ent - theta_exi|
};
Properties3Report properties3(const SkeletonMeasure &s);
// Max entrywise |nu_S - Q| over squares.
double nu_s_defect(const SkeletonMeasure &s, const TransportMeasure &q0);

// Feasibility repair by mixing with f^uni at lambda = 2 delta / (delta + B0 - 1/4).
struct StandardizeResult {
  FlowVolume flow;
  double lambda = 0.0;
};
StandardizeResult standardize(const FlowVolume &f1, const FlowVolume &f2, double b0, double delta,
                              int n);
double standardize_cost_bound(int n, double b0, double delta, double c_max);

// Smallest odd integer >= N/8.
int default_smoothing_width(int n);

struct AssemblyResult {
  FlowVolume flow; // final volume, max <= B
  double cost = 0.0;
  FlowVolume step1, step2, step3, step4; // exactly standardized after reweighting
  double w_n = 0.0;     // N^2 times the smallest endpoint probability
  int l_n = 1;
  double max_before_repair = 0.0;
  double repair_lambda = 0.0;
  double local_total = 0.0;  // sum of per-square local optimal costs
  double local_mean = 0.0;
  double target = 0.0;       // (N/M)^2 * local_mean
  double half_edge_mismatch = 0.0;
  int local_failures = 0;    // squares whose local solve did not converge
  int local_relaxed = 0;     // squares solved without the cap (then repaired)
  bool feasible = false;
};

// Endpoint law of the four steps given a start square: probability of each
// torus vertex. Translation by whole squares maps it to the other squares.
Eigen::VectorXd assembly_endpoint_law(const IsotropicMixture &mix, int n, int m, int l_n);

/// Per-square demands of the four steps, identical in every square. Each
/// pair (start, end) is rescaled by N^-2 / law(end) so that it carries
/// exactly N^-3; with reweight = false the raw construction is returned.
struct AssemblyDemands {
  Eigen::VectorXd rho1;  // step 1: boundary point -> uniform cell (4M)
  Eigen::MatrixXd cross; // step 2: entry -> exit transport (4M x 4M)
  Eigen::MatrixXd d3;    // step 3: entry -> cell (4M x M^2, cell i + M j)
  Eigen::MatrixXd d4;    // step 4: cell -> offset in the L x L window (M^2 x L^2)
  Eigen::VectorXd law;   // endpoint law from square 0
};

AssemblyDemands assembly_demands(const IsotropicMixture &mix, int n, int m, int l_n,
                                 bool reweight = true);

AssemblyResult assemble_global(int n, int m, const Environment &env, const IsotropicMixture &mix,
                               int l_n, const SolverConfig &cfg);

} // namespace latflow
