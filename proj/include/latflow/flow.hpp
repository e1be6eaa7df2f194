#pragma once

#include "latflow/environment.hpp"
#include "latflow/lattice.hpp"

#include <Eigen/Core>

#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace latflow {

/// Oriented path in a Graph: vertices v0..vk and the edge used for each step.
struct LatticePath {
  std::vector<int> vertices;
  std::vector<int> edges;

  int entrance() const { return vertices.front(); }
  int exit() const { return vertices.back(); }
  int length() const { return static_cast<int>(edges.size()); }
};

// Builds a path through consecutive adjacent vertices; throws otherwise.
LatticePath make_path(const Graph &graph, const std::vector<int> &vertices);
bool is_self_avoiding(const LatticePath &path);

template <class Scalar> struct WeightedPath {
  LatticePath path;
  Scalar weight;
};

template <class Scalar> using PathFlow = std::vector<WeightedPath<Scalar>>;
template <class Scalar> using Volume = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using FlowVolume = Eigen::VectorXd;
// (entrance vertex, exit vertex) -> mass.
template <class Scalar> using TransportTable = std::map<std::pair<int, int>, Scalar>;

template <class Scalar> Volume<Scalar> flo(const PathFlow<Scalar> &mu, int num_edges) {
  Volume<Scalar> f = Volume<Scalar>::Constant(num_edges, Scalar(0));
  for (const auto &wp : mu) {
    if (wp.weight < Scalar(0))
      throw std::invalid_argument("flo: negative path weight");
    for (int e : wp.path.edges)
      f[e] += wp.weight;
  }
  return f;
}

template <class Scalar> TransportTable<Scalar> tra(const PathFlow<Scalar> &mu) {
  TransportTable<Scalar> table;
  for (const auto &wp : mu) {
    auto [it, inserted] = table.try_emplace({wp.path.entrance(), wp.path.exit()}, wp.weight);
    if (!inserted)
      it->second += wp.weight;
  }
  return table;
}

template <class Scalar> Scalar total_weight(const PathFlow<Scalar> &mu) {
  Scalar total(0);
  for (const auto &wp : mu)
    total += wp.weight;
  return total;
}

template <class Scalar> PathFlow<Scalar> scaled(PathFlow<Scalar> mu, const Scalar &alpha) {
  for (auto &wp : mu)
    wp.weight *= alpha;
  return mu;
}

// Sum of c(e) f(e)^2 in edge-index order.
double cost(const FlowVolume &f, const Eigen::VectorXd &c);
double cost(const FlowVolume &f, const Environment &env);

// Net displacement divided by N, using the edge orientation of each step.
Eigen::Vector2d winding(const LatticePath &path, const Torus &torus);

// floor(N^2/2) / (2N^2).
double uniform_flow_value(int n);

struct UniformFlow {
  FlowVolume volume;
  double value;
  // Transportation measure of the underlying path-flow, constant over pairs.
  double mass_per_pair;
};
UniformFlow uniform_flow(int n);

// Flow-volume from source (0,0) alone when N^-3 is sent to every vertex,
// spread uniformly over all minimal torus paths.
FlowVolume uniform_source_volume(int n);
// Volume of the same pattern translated so that (0,0) moves to `shift`.
FlowVolume translate_torus_volume(const FlowVolume &f, int n, TorusVertex shift);

} // namespace latflow
