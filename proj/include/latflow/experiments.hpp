#pragma once

#include "latflow/environment.hpp"
#include "latflow/rng.hpp"
#include "latflow/solver.hpp"
#include "latflow/transport.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace latflow {

inline constexpr double kNA = std::numeric_limits<double>::quiet_NaN();

/// One replicate. NaN fields are written as NA.
struct ResultRow {
  std::string experiment;
  int n = 0;
  int m = 0;
  double b = kNA;
  double p = kNA;
  std::uint64_t seed = 0;
  double objective = kNA;
  double gap = kNA;
  double residual = kNA;
  double walltime = kNA;
  std::vector<std::pair<std::string, double>> extra;
};

/// Point estimate from replicates; stderr = sample std / sqrt(n).
struct EstimateRecord {
  double estimate = 0.0;
  double stderr_ = 0.0;
  int count = 0;
  std::vector<double> values;
  std::vector<std::uint64_t> env_hashes;
};
EstimateRecord make_record(std::vector<double> values, std::vector<std::uint64_t> hashes = {});

struct ExperimentReport {
  std::string experiment;
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, double>> summary; // insertion order kept
  std::vector<std::string> notes;
  bool all_converged = true;

  void put(std::string key, double value) { summary.emplace_back(std::move(key), value); }
  // Throws if absent.
  double get(const std::string &key) const;
};

struct RunOptions {
  bool timings = false; // fill walltime columns
};

// Seed of replicate r; shared across B values and candidates (common random
// numbers).
inline std::uint64_t replicate_seed(std::uint64_t seed, int r) {
  return derive_seed(seed, static_cast<std::uint64_t>(r));
}

// Upper estimate of c_{M,B}: min over grid mixtures of the mean local cost.
ExperimentReport estimate_cM(int m, double b, const CostDistribution &dist,
                             const std::vector<int> &grids, int n_env, std::uint64_t seed,
                             const SolverConfig &cfg, const DriftOptions &drift = {DriftBasis::MinimalDisplacement, 0.0},
                             const RunOptions &run = {});

// N^-2 times the mean optimal global cost per N.
ExperimentReport estimate_gamma(const std::vector<int> &n_list, double b,
                                const CostDistribution &dist, int n_env, std::uint64_t seed,
                                const SolverConfig &cfg, const RunOptions &run = {});

// Lower-tail frequencies of cost_{M,B}(Q, c) against the bounded-difference
// bound, plus a single-edge resampling audit. Empty lambdas: default grid.
ExperimentReport concentration_experiment(int m, double b, const TransportMeasure &q,
                                          const CostDistribution &dist, int n_samples,
                                          std::vector<double> lambdas, std::uint64_t seed,
                                          const SolverConfig &cfg, int audit = 100,
                                          const RunOptions &run = {});

// Paired objectives over ascending B on shared environments.
ExperimentReport b_sweep(int n, const CostDistribution &dist, std::vector<double> b_list, int n_env,
                         std::uint64_t seed, const SolverConfig &cfg, const RunOptions &run = {});

// Two-point environments P(c = 0) = p over the p grid.
ExperimentReport percolation_probe(int n, double b, const std::vector<double> &p_list,
                                   double c_star, int n_env, std::uint64_t seed,
                                   const SolverConfig &cfg, const RunOptions &run = {});

// Two-sided deviation frequencies of the global cost about its mean.
ExperimentReport slln_check(int n, double b, const CostDistribution &dist, int n_env,
                            std::vector<double> lambdas, std::uint64_t seed,
                            const SolverConfig &cfg, const RunOptions &run = {});

// c_{M,B} upper estimates over M and the increments per window.
ExperimentReport lemma15_probe(const std::vector<int> &m_list, double b,
                               const CostDistribution &dist, const std::vector<int> &grids,
                               int n_env, std::uint64_t seed, const SolverConfig &cfg,
                               const RunOptions &run = {});

} // namespace latflow
