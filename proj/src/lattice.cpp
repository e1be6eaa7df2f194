#include "latflow/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace latflow {

Graph::Graph(int num_vertices, std::vector<std::pair<int, int>> edges)
    : num_vertices_(num_vertices), edges_(std::move(edges)) {
  offsets_.assign(num_vertices_ + 1, 0);
  for (const auto &[u, v] : edges_) {
    if (u < 0 || v < 0 || u >= num_vertices_ || v >= num_vertices_)
      throw std::invalid_argument("Graph: edge endpoint out of range");
    ++offsets_[u + 1];
    ++offsets_[v + 1];
  }
  for (int v = 0; v < num_vertices_; ++v)
    offsets_[v + 1] += offsets_[v];
  arcs_.resize(offsets_.back());
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int e = 0; e < num_edges(); ++e) {
    const auto [u, v] = edges_[e];
    arcs_[fill[u]++] = {v, e};
    arcs_[fill[v]++] = {u, e};
  }
}

std::optional<int> Graph::edge_between(int u, int v) const {
  std::optional<int> best;
  for (const Arc &a : arcs(u))
    if (a.to == v && (!best || a.edge < *best))
      best = a.edge;
  return best;
}

Torus::Torus(int n) : n_(n) {
  if (n < 2)
    throw std::invalid_argument("Torus: size must be at least 2");
  std::vector<std::pair<int, int>> edges(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int head = j * n + i;
      edges[2 * head + 0] = {vertex_index(wrap(i - 1, j)), head};
      edges[2 * head + 1] = {vertex_index(wrap(i, j - 1)), head};
    }
  }
  graph_ = Graph(n * n, std::move(edges));
}

int Torus::vertex_index(TorusVertex v) const {
  const TorusVertex w = wrap(v.i, v.j);
  return w.j * n_ + w.i;
}

TorusVertex Torus::wrap(int i, int j) const {
  i %= n_;
  j %= n_;
  if (i < 0)
    i += n_;
  if (j < 0)
    j += n_;
  return {i, j};
}

int torus_distance(TorusVertex v, TorusVertex w, int n) {
  auto axis = [n](int a, int b) {
    int d = std::abs(a - b) % n;
    return std::min(d, n - d);
  };
  return axis(v.i, w.i) + axis(v.j, w.j);
}

int boundary_index(BoundaryPoint b, int m) { return static_cast<int>(b.side) * m + b.offset; }

BoundaryPoint boundary_point(int index, int m) {
  return {static_cast<Side>(index / m), index % m};
}

BoundaryPoint reflect(BoundaryPoint b) {
  switch (b.side) {
  case Side::Left:
    return {Side::Right, b.offset};
  case Side::Right:
    return {Side::Left, b.offset};
  case Side::Bottom:
    return {Side::Top, b.offset};
  case Side::Top:
    return {Side::Bottom, b.offset};
  }
  return b;
}

Eigen::Vector2d boundary_coordinates(BoundaryPoint b, int m) {
  const double o = b.offset;
  switch (b.side) {
  case Side::Left:
    return {-0.5, o};
  case Side::Right:
    return {m - 0.5, o};
  case Side::Bottom:
    return {o, -0.5};
  case Side::Top:
    return {o, m - 0.5};
  }
  return {0.0, 0.0};
}

ExtendedSquare::ExtendedSquare(int m) : m_(m) {
  if (m < 1)
    throw std::invalid_argument("ExtendedSquare: size must be positive");
  std::vector<std::pair<int, int>> edges(num_edges());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const int v = internal_vertex(i, j);
      const int west = i > 0 ? internal_vertex(i - 1, j) : boundary_vertex({Side::Left, j});
      const int south = j > 0 ? internal_vertex(i, j - 1) : boundary_vertex({Side::Bottom, i});
      edges[assigned_edge(i, j, Axis::Horizontal)] = {west, v};
      edges[assigned_edge(i, j, Axis::Vertical)] = {south, v};
    }
  }
  for (int o = 0; o < m; ++o) {
    edges[half_edge({Side::Right, o})] = {internal_vertex(m - 1, o), boundary_vertex({Side::Right, o})};
    edges[half_edge({Side::Top, o})] = {internal_vertex(o, m - 1), boundary_vertex({Side::Top, o})};
  }
  graph_ = Graph(num_vertices(), std::move(edges));
}

Eigen::Vector2d ExtendedSquare::position(int v) const {
  if (is_boundary_vertex(v))
    return boundary_coordinates(boundary_of_vertex(v), m_);
  return {static_cast<double>(v % m_), static_cast<double>(v / m_)};
}

int ExtendedSquare::half_edge(BoundaryPoint b) const {
  switch (b.side) {
  case Side::Left:
    return assigned_edge(0, b.offset, Axis::Horizontal);
  case Side::Bottom:
    return assigned_edge(b.offset, 0, Axis::Vertical);
  case Side::Right:
    return 2 * m_ * m_ + b.offset;
  case Side::Top:
    return 2 * m_ * m_ + m_ + b.offset;
  }
  return -1;
}

void require_divides(int m, int n) {
  if (m < 1 || n < 1 || n % m != 0)
    throw std::invalid_argument("M must divide N (got M=" + std::to_string(m) +
                                ", N=" + std::to_string(n) + ")");
}

SquareLocation partition_locate(TorusVertex v, int n, int m) {
  require_divides(m, n);
  const int i = ((v.i % n) + n) % n;
  const int j = ((v.j % n) + n) % n;
  return {i / m, j / m, i % m, j % m};
}

SkeletonLayout::SkeletonLayout(int n, int m) : n_(n), m_(m) { require_divides(m, n); }

int SkeletonLayout::square_index(int si, int sj) const {
  const int s = squares_per_axis();
  si = ((si % s) + s) % s;
  sj = ((sj % s) + s) % s;
  return sj * s + si;
}

int SkeletonLayout::point_of(int square, BoundaryPoint b) const {
  const auto [si, sj] = square_coords(square);
  const int s = squares_per_axis();
  switch (b.side) {
  case Side::Left:
    return si * n_ + sj * m_ + b.offset;
  case Side::Right:
    return ((si + 1) % s) * n_ + sj * m_ + b.offset;
  case Side::Bottom:
    return s * n_ + sj * n_ + si * m_ + b.offset;
  case Side::Top:
    return s * n_ + ((sj + 1) % s) * n_ + si * m_ + b.offset;
  }
  return -1;
}

SkeletonState SkeletonLayout::state(int index) const {
  const int square = state_square(index);
  const BoundaryPoint entry = state_entry(index);
  const Arrow arrow =
      (entry.side == Side::Left || entry.side == Side::Bottom) ? Arrow::Positive : Arrow::Negative;
  return {point_of(square, entry), arrow};
}

int SkeletonLayout::state_index(SkeletonState st) const {
  const int s = squares_per_axis();
  const int per_axis = s * n_;
  const bool vertical_line = st.point < per_axis;
  const int local = vertical_line ? st.point : st.point - per_axis;
  const int line = local / n_;
  const int along = local % n_;
  const bool positive = st.arrow == Arrow::Positive;
  if (vertical_line) {
    const int si = positive ? line : line - 1;
    return state_index(square_index(si, along / m_),
                       {positive ? Side::Left : Side::Right, along % m_});
  }
  const int sj = positive ? line : line - 1;
  return state_index(square_index(along / m_, sj),
                     {positive ? Side::Bottom : Side::Top, along % m_});
}

int SkeletonLayout::point_edge(int point) const {
  const int per_axis = squares_per_axis() * n_;
  if (point < per_axis) {
    const int line = point / n_, along = point % n_;
    return 2 * (along * n_ + line * m_) + 0;
  }
  const int local = point - per_axis;
  const int line = local / n_, along = local % n_;
  return 2 * ((line * m_) * n_ + along) + 1;
}

Eigen::Vector2d SkeletonLayout::point_position(int point) const {
  const int per_axis = squares_per_axis() * n_;
  if (point < per_axis)
    return {point / n_ * m_ - 0.5, static_cast<double>(point % n_)};
  const int local = point - per_axis;
  return {static_cast<double>(local % n_), local / n_ * m_ - 0.5};
}

int SkeletonLayout::neighbour(int square, Side side) const {
  const auto [si, sj] = square_coords(square);
  switch (side) {
  case Side::Left:
    return square_index(si - 1, sj);
  case Side::Right:
    return square_index(si + 1, sj);
  case Side::Bottom:
    return square_index(si, sj - 1);
  case Side::Top:
    return square_index(si, sj + 1);
  }
  return square;
}

int SkeletonLayout::exit_state(int square, BoundaryPoint b) const {
  return state_index(neighbour(square, b.side), reflect(b));
}

int SkeletonLayout::translate_point(int point, int dsi, int dsj) const {
  const int s = squares_per_axis();
  const int per_axis = s * n_;
  auto wrap = [](int x, int k) { return ((x % k) + k) % k; };
  if (point < per_axis) {
    const int line = point / n_, along = point % n_;
    return wrap(line + dsi, s) * n_ + wrap(along + dsj * m_, n_);
  }
  const int local = point - per_axis;
  const int line = local / n_, along = local % n_;
  return per_axis + wrap(line + dsj, s) * n_ + wrap(along + dsi * m_, n_);
}

std::vector<SkeletonState> skeleton_states(int n, int m) {
  const SkeletonLayout layout(n, m);
  std::vector<SkeletonState> out;
  out.reserve(layout.num_states());
  for (int s = 0; s < layout.num_states(); ++s)
    out.push_back(layout.state(s));
  return out;
}

} // namespace latflow
