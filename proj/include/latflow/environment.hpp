#pragma once

#include "latflow/lattice.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace latflow {

/// Bounded cost-factor law on [0, c*].
///
/// Text form (also used on the command line):
///   constant:<c>   uniform:<cstar>   twopoint:<p>:<cstar>
///   discrete:<v1>:<w1>,<v2>:<w2>,...
/// For twopoint, p is P(c = 0) and 1 - p is P(c = c*).
class CostDistribution {
public:
  enum class Kind { Constant, Uniform, TwoPoint, Discrete };

  static CostDistribution constant(double c);
  static CostDistribution uniform(double c_star);
  static CostDistribution two_point(double p_zero, double c_star);
  static CostDistribution discrete(std::vector<double> values, std::vector<double> weights);
  static CostDistribution parse(std::string_view spec);

  Kind kind() const { return kind_; }
  double c_star() const { return c_star_; }
  double mean() const;
  bool is_degenerate() const;
  // Inverse-CDF draw from a uniform u in [0, 1).
  double sample(double u) const;
  std::string describe() const;

private:
  CostDistribution() = default;

  Kind kind_ = Kind::Constant;
  double c_star_ = 0.0;
  double param_ = 0.0;
  std::vector<double> values_;
  std::vector<double> cumulative_;
  std::vector<double> weights_;
};

enum class EnvironmentKind { Torus, Square };

/// Cost-factors indexed by edge id of a torus or extended square. Immutable.
class Environment {
public:
  Environment(EnvironmentKind kind, int size, Eigen::VectorXd cost, double c_star,
              std::uint64_t seed = 0, std::string dist = {});

  EnvironmentKind kind() const { return kind_; }
  int size() const { return size_; }
  int num_edges() const { return static_cast<int>(cost_.size()); }
  const Eigen::VectorXd &cost() const { return cost_; }
  double operator[](int edge) const { return cost_[edge]; }
  double c_star() const { return c_star_; }
  std::uint64_t seed() const { return seed_; }
  const std::string &dist() const { return dist_; }

  // Same graph, one edge replaced; used by bounded-difference audits.
  Environment with_cost(int edge, double value) const;

private:
  EnvironmentKind kind_;
  int size_;
  Eigen::VectorXd cost_;
  double c_star_;
  std::uint64_t seed_;
  std::string dist_;
};

int expected_edge_count(EnvironmentKind kind, int size);

Environment sample_torus_env(int n, const CostDistribution &dist, std::uint64_t seed);
Environment sample_square_env(int m, const CostDistribution &dist, std::uint64_t seed);

// Local environment seen by the M x M subsquare with lower-left corner at
// `corner`: c_local(e) = c(e + corner) on assigned edges, zero on the right
// and top half-edges.
Environment restrict_env_at(const Environment &torus_env, TorusVertex corner, int m);
// Same, for square (si, sj) of the natural partition.
Environment restrict_env(const Environment &torus_env, int si, int sj, int n, int m);

std::uint64_t environment_hash(const Environment &env);
std::uint64_t fnv1a64(const void *data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

} // namespace latflow
