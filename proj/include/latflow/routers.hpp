#pragma once

// Environment-independent path-flows used to patch constructions together.
// All routers are templated on the weight type so that bounds can be checked
// in exact rational arithmetic.

#include "latflow/flow.hpp"
#include "latflow/lattice.hpp"
#include "latflow/transport.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace latflow {
namespace detail {

// Internal-vertex walk on the square from (i0, j0) to (i1, j1), moving along
// `first` axis, then the other. Excludes the start vertex.
inline void append_l_walk(const ExtendedSquare &sq, std::vector<int> &out, int i0, int j0, int i1,
                          int j1, Axis first) {
  auto step_i = [&](int target, int j) {
    while (i0 != target) {
      i0 += target > i0 ? 1 : -1;
      out.push_back(sq.internal_vertex(i0, j));
    }
  };
  auto step_j = [&](int target, int i) {
    while (j0 != target) {
      j0 += target > j0 ? 1 : -1;
      out.push_back(sq.internal_vertex(i, j0));
    }
  };
  if (first == Axis::Horizontal) {
    step_i(i1, j0);
    step_j(j1, i0);
  } else {
    step_j(j1, i0);
    step_i(i1, j0);
  }
}

// Internal vertex adjacent to boundary point b.
inline std::pair<int, int> entry_cell(BoundaryPoint b, int m) {
  switch (b.side) {
  case Side::Left:
    return {0, b.offset};
  case Side::Right:
    return {m - 1, b.offset};
  case Side::Bottom:
    return {b.offset, 0};
  case Side::Top:
    return {b.offset, m - 1};
  }
  return {0, 0};
}

// Vertices of the one-turn path from boundary point b to internal (zi, zj):
// first straight inward, then along the side direction.
inline std::vector<int> one_turn(const ExtendedSquare &sq, BoundaryPoint b, int zi, int zj) {
  const auto [ci, cj] = entry_cell(b, sq.size());
  std::vector<int> v{sq.boundary_vertex(b), sq.internal_vertex(ci, cj)};
  const bool horizontal_side = b.side == Side::Left || b.side == Side::Right;
  append_l_walk(sq, v, ci, cj, zi, zj, horizontal_side ? Axis::Horizontal : Axis::Vertical);
  return v;
}

} // namespace detail

/// Sends rho(b) from each boundary point to a uniform internal vertex along
/// the path with at most one turn. Edge volume at most 2 max rho.
template <class Scalar>
PathFlow<Scalar> router_lemma8(const ExtendedSquare &sq,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &rho) {
  const int m = sq.size();
  if (rho.size() != 4 * m)
    throw std::invalid_argument("router_lemma8: rho must have 4M entries");
  PathFlow<Scalar> mu;
  const Scalar cells = Scalar(m * m);
  for (int k = 0; k < 4 * m; ++k) {
    if (rho[k] == Scalar(0))
      continue;
    const BoundaryPoint b = boundary_point(k, m);
    const Scalar w = rho[k] / cells;
    for (int zj = 0; zj < m; ++zj)
      for (int zi = 0; zi < m; ++zi)
        mu.push_back({make_path(sq.graph(), detail::one_turn(sq, b, zi, zj)), w});
  }
  return mu;
}

/// Routes Q(b, b') through a uniform internal vertex: a one-turn path in,
/// then the reverse of the one-turn path from b'. tra = Q exactly; edge
/// volume at most 2 (max Q_exi + max Q_ent).
template <class Scalar>
PathFlow<Scalar> router_lemma9(const ExtendedSquare &sq, const BasicTransport<Scalar> &q) {
  const int m = sq.size();
  if (q.m != m)
    throw std::invalid_argument("router_lemma9: measure and square sizes differ");
  PathFlow<Scalar> mu;
  const Scalar cells = Scalar(m * m);
  for (int a = 0; a < 4 * m; ++a) {
    for (int b = 0; b < 4 * m; ++b) {
      if (q.mass(a, b) == Scalar(0))
        continue;
      const Scalar w = q.mass(a, b) / cells;
      for (int zj = 0; zj < m; ++zj) {
        for (int zi = 0; zi < m; ++zi) {
          auto in = detail::one_turn(sq, boundary_point(a, m), zi, zj);
          auto out = detail::one_turn(sq, boundary_point(b, m), zi, zj);
          in.insert(in.end(), out.rbegin() + 1, out.rend());
          mu.push_back({make_path(sq.graph(), in), w});
        }
      }
    }
  }
  return mu;
}

/// K x K square: theta on the bottom points, delivered uniformly to the top
/// points. A pair (x, y) goes up column x to row |y - x| - 1, across, then up
/// column y; x == y goes straight up. Edge volume at most max theta.
template <class Scalar>
PathFlow<Scalar> router_lemma10(const ExtendedSquare &sq,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &theta) {
  const int k = sq.size();
  if (theta.size() != k)
    throw std::invalid_argument("router_lemma10: theta must have K entries");
  PathFlow<Scalar> mu;
  for (int x = 0; x < k; ++x) {
    if (theta[x] == Scalar(0))
      continue;
    const Scalar w = theta[x] / Scalar(k);
    for (int y = 0; y < k; ++y) {
      std::vector<int> v{sq.boundary_vertex({Side::Bottom, x}), sq.internal_vertex(x, 0)};
      const int d = x == y ? 0 : std::abs(y - x) - 1;
      detail::append_l_walk(sq, v, x, 0, x, d, Axis::Vertical);
      detail::append_l_walk(sq, v, x, d, y, d, Axis::Horizontal);
      detail::append_l_walk(sq, v, y, d, y, k - 1, Axis::Vertical);
      v.push_back(sq.boundary_vertex({Side::Top, y}));
      mu.push_back({make_path(sq.graph(), v), w});
    }
  }
  return mu;
}

/// Torus path-flow whose transportation measure is the law of (U, U + D)
/// with U uniform on the torus and D uniform on the centred L x L square.
/// Horizontal leg first. Edge volume at most L / (4 N^2).
template <class Scalar> PathFlow<Scalar> router_lemma7(const Torus &torus, int l) {
  const int n = torus.size();
  if (l < 1 || l % 2 == 0 || l > n)
    throw std::invalid_argument("router_lemma7: L must be odd with 1 <= L <= N");
  const int h = (l - 1) / 2;
  const Scalar w = Scalar(1) / Scalar(n * n * l * l);
  PathFlow<Scalar> mu;
  for (int s = 0; s < n * n; ++s) {
    const TorusVertex v = torus.vertex(s);
    for (int b = -h; b <= h; ++b) {
      for (int a = -h; a <= h; ++a) {
        std::vector<int> walk{s};
        int i = v.i, j = v.j;
        for (int t = 0; t < std::abs(a); ++t) {
          i += a > 0 ? 1 : -1;
          walk.push_back(torus.vertex_index(torus.wrap(i, j)));
        }
        for (int t = 0; t < std::abs(b); ++t) {
          j += b > 0 ? 1 : -1;
          walk.push_back(torus.vertex_index(torus.wrap(i, j)));
        }
        LatticePath p;
        p.vertices = walk;
        // Resolve edges by direction: edge_between is ambiguous for N = 2.
        i = v.i;
        j = v.j;
        for (int t = 0; t < std::abs(a); ++t) {
          const int ni = i + (a > 0 ? 1 : -1);
          p.edges.push_back(torus.edge_index(torus.wrap(std::max(i, ni), j), Axis::Horizontal));
          i = ni;
        }
        for (int t = 0; t < std::abs(b); ++t) {
          const int nj = j + (b > 0 ? 1 : -1);
          p.edges.push_back(torus.edge_index(torus.wrap(i, std::max(j, nj)), Axis::Vertical));
          j = nj;
        }
        mu.push_back({std::move(p), w});
      }
    }
  }
  return mu;
}

// Edge volume of router_lemma7, identical on every edge: (L^2 - 1) / (4 L N^2).
inline double lemma7_volume(int n, int l) {
  return (double(l) * l - 1.0) / (4.0 * l * double(n) * n);
}

inline double lemma7_bound(int n, int l) { return double(l) / (4.0 * double(n) * n); }

} // namespace latflow
