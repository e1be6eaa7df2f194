#include "latflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace latflow {

LatticePath make_path(const Graph &graph, const std::vector<int> &vertices) {
  if (vertices.empty())
    throw std::invalid_argument("make_path: empty vertex list");
  LatticePath path;
  path.vertices = vertices;
  path.edges.reserve(vertices.size() - 1);
  for (std::size_t k = 0; k + 1 < vertices.size(); ++k) {
    const auto e = graph.edge_between(vertices[k], vertices[k + 1]);
    if (!e)
      throw std::invalid_argument("make_path: consecutive vertices are not adjacent");
    path.edges.push_back(*e);
  }
  return path;
}

bool is_self_avoiding(const LatticePath &path) {
  std::unordered_set<int> seen(path.vertices.begin(), path.vertices.end());
  return seen.size() == path.vertices.size();
}

double cost(const FlowVolume &f, const Eigen::VectorXd &c) {
  if (f.size() != c.size())
    throw std::invalid_argument("cost: flow and environment have different edge sets");
  double total = 0.0;
  for (Eigen::Index e = 0; e < f.size(); ++e)
    total += c[e] * f[e] * f[e];
  return total;
}

double cost(const FlowVolume &f, const Environment &env) { return cost(f, env.cost()); }

Eigen::Vector2d winding(const LatticePath &path, const Torus &torus) {
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  const int n = torus.size();
  for (int k = 0; k < path.length(); ++k) {
    const int e = path.edges[k];
    const int head = torus.vertex_index(torus.edge_head(e));
    const int axis = static_cast<int>(torus.edge_axis(e));
    z[axis] += path.vertices[k + 1] == head && path.vertices[k] != head ? 1.0 : -1.0;
  }
  return z / n;
}

double uniform_flow_value(int n) {
  if (n < 2)
    throw std::invalid_argument("uniform_flow: N must be at least 2");
  return static_cast<double>((n * n) / 2) / (2.0 * n * n);
}

UniformFlow uniform_flow(int n) {
  const double value = uniform_flow_value(n);
  return {FlowVolume::Constant(2 * n * n, value), value, 1.0 / (double(n) * n * n)};
}

FlowVolume uniform_source_volume(int n) {
  const Torus torus(n);
  FlowVolume f = FlowVolume::Zero(torus.num_edges());
  // Pascal table; C(2N, N) fits comfortably in a double for desk-scale N.
  const int top = n + 1;
  std::vector<std::vector<double>> binom(top + 1, std::vector<double>(top + 1, 0.0));
  for (int a = 0; a <= top; ++a) {
    binom[a][0] = 1.0;
    for (int b = 1; b <= a; ++b)
      binom[a][b] = binom[a - 1][b - 1] + binom[a - 1][b];
  }
  auto choose = [&](int a, int b) { return (b < 0 || b > a) ? 0.0 : binom[a][b]; };
  auto options = [n](int a) {
    std::vector<int> out;
    if (a <= n - a)
      out.push_back(a);
    if (n - a <= a && a != 0)
      out.push_back(a - n);
    return out;
  };
  const double demand = 1.0 / (double(n) * n * n);
  for (int tj = 0; tj < n; ++tj) {
    for (int ti = 0; ti < n; ++ti) {
      const auto ox = options(ti), oy = options(tj);
      const double share = demand / double(ox.size() * oy.size());
      for (int dx : ox) {
        for (int dy : oy) {
          const int ax = std::abs(dx), ay = std::abs(dy);
          const int sx = dx >= 0 ? 1 : -1, sy = dy >= 0 ? 1 : -1;
          const double total = choose(ax + ay, ax);
          for (int y = 0; y <= ay; ++y) {
            for (int x = 0; x <= ax; ++x) {
              const double before = choose(x + y, x);
              if (x < ax) {
                const double frac = before * choose(ax - x - 1 + ay - y, ay - y) / total;
                const TorusVertex head = torus.wrap(sx * x + (sx > 0 ? 1 : 0), sy * y);
                f[torus.edge_index(head, Axis::Horizontal)] += share * frac;
              }
              if (y < ay) {
                const double frac = before * choose(ax - x + ay - y - 1, ax - x) / total;
                const TorusVertex head = torus.wrap(sx * x, sy * y + (sy > 0 ? 1 : 0));
                f[torus.edge_index(head, Axis::Vertical)] += share * frac;
              }
            }
          }
        }
      }
    }
  }
  return f;
}

FlowVolume translate_torus_volume(const FlowVolume &f, int n, TorusVertex shift) {
  const Torus torus(n);
  FlowVolume out(f.size());
  for (int e = 0; e < torus.num_edges(); ++e) {
    const TorusVertex h = torus.edge_head(e);
    out[torus.edge_index(torus.wrap(h.i + shift.i, h.j + shift.j), torus.edge_axis(e))] = f[e];
  }
  return out;
}

} // namespace latflow
