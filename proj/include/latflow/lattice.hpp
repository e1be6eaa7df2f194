#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace latflow {

enum class Axis : std::uint8_t { Horizontal = 0, Vertical = 1 };
enum class Side : std::uint8_t { Left = 0, Right = 1, Bottom = 2, Top = 3 };

struct TorusVertex {
  int i = 0;
  int j = 0;
  friend bool operator==(const TorusVertex &, const TorusVertex &) = default;
};

struct BoundaryPoint {
  Side side = Side::Left;
  int offset = 0;
  friend bool operator==(const BoundaryPoint &, const BoundaryPoint &) = default;
};

// Undirected multigraph in CSR form. Edge ids are canonical; arcs carry the
// edge id so traversal direction is recorded by the caller.
class Graph {
public:
  struct Arc {
    int to;
    int edge;
  };

  Graph() = default;
  Graph(int num_vertices, std::vector<std::pair<int, int>> edges);

  int num_vertices() const { return num_vertices_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  std::pair<int, int> endpoints(int edge) const { return edges_[edge]; }
  std::span<const Arc> arcs(int vertex) const {
    return {arcs_.data() + offsets_[vertex], arcs_.data() + offsets_[vertex + 1]};
  }
  int degree(int vertex) const { return offsets_[vertex + 1] - offsets_[vertex]; }

  // Lowest-id edge joining u and v, if any.
  std::optional<int> edge_between(int u, int v) const;

private:
  int num_vertices_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> offsets_;
  std::vector<Arc> arcs_;
};

/// The N x N discrete torus. Vertex (i, j) has index j*N + i. Every vertex
/// owns the two edges entering it from the left (Horizontal) and from below
/// (Vertical), so edge 2*index(v) + axis joins v - unit(axis) and v.
class Torus {
public:
  explicit Torus(int n);

  int size() const { return n_; }
  int num_vertices() const { return n_ * n_; }
  int num_edges() const { return 2 * n_ * n_; }

  int vertex_index(TorusVertex v) const;
  TorusVertex vertex(int index) const { return {index % n_, index / n_}; }
  TorusVertex wrap(int i, int j) const;
  int edge_index(TorusVertex head, Axis axis) const {
    return 2 * vertex_index(head) + static_cast<int>(axis);
  }
  TorusVertex edge_head(int edge) const { return vertex(edge / 2); }
  Axis edge_axis(int edge) const { return static_cast<Axis>(edge % 2); }

  const Graph &graph() const { return graph_; }

private:
  int n_;
  Graph graph_;
};

int torus_distance(TorusVertex v, TorusVertex w, int n);

// Boundary point indexing on the extended M x M square: side-major.
int boundary_index(BoundaryPoint b, int m);
BoundaryPoint boundary_point(int index, int m);
BoundaryPoint reflect(BoundaryPoint b);
// Real-plane position, e.g. (left, j) -> (-1/2, j).
Eigen::Vector2d boundary_coordinates(BoundaryPoint b, int m);

/// The extended M x M square: M^2 internal vertices plus 4M boundary points
/// joined to the square by half-edges.
///
/// Edge layout mirrors the torus: edge 2*(j*M+i)+axis enters internal vertex
/// (i, j) from the left or from below, which makes the first 2M^2 edges the
/// ones carrying random cost (internal edges plus left/bottom half-edges).
/// The remaining 2M edges are the right and top half-edges, cost zero by
/// convention.
class ExtendedSquare {
public:
  explicit ExtendedSquare(int m);

  int size() const { return m_; }
  int num_internal() const { return m_ * m_; }
  int num_boundary() const { return 4 * m_; }
  int num_vertices() const { return m_ * m_ + 4 * m_; }
  int num_edges() const { return 2 * m_ * m_ + 2 * m_; }
  int num_assigned_edges() const { return 2 * m_ * m_; }

  int internal_vertex(int i, int j) const { return j * m_ + i; }
  int boundary_vertex(BoundaryPoint b) const { return m_ * m_ + boundary_index(b, m_); }
  bool is_boundary_vertex(int v) const { return v >= m_ * m_; }
  BoundaryPoint boundary_of_vertex(int v) const { return boundary_point(v - m_ * m_, m_); }
  Eigen::Vector2d position(int v) const;

  int assigned_edge(int i, int j, Axis axis) const {
    return 2 * internal_vertex(i, j) + static_cast<int>(axis);
  }
  int half_edge(BoundaryPoint b) const;

  const Graph &graph() const { return graph_; }

private:
  int m_;
  Graph graph_;
};

struct SquareLocation {
  int square_i = 0;
  int square_j = 0;
  int local_i = 0;
  int local_j = 0;
  friend bool operator==(const SquareLocation &, const SquareLocation &) = default;
};

// Throws std::invalid_argument unless m divides n.
void require_divides(int m, int n);
SquareLocation partition_locate(TorusVertex v, int n, int m);

enum class Arrow : std::uint8_t { Positive = 0, Negative = 1 };

struct SkeletonState {
  int point = 0; // index of an inter-square boundary point
  Arrow arrow = Arrow::Positive;
  friend bool operator==(const SkeletonState &, const SkeletonState &) = default;
};

/// Boundary points of the natural partition of the N x N torus into M x M
/// squares, and the directed skeleton states built on them.
///
/// A skeleton state is identified with the square its arrow points into and
/// the entry point on that square's boundary, giving the index
/// square * 4M + boundary_index(entry).
class SkeletonLayout {
public:
  SkeletonLayout(int n, int m);

  int n() const { return n_; }
  int m() const { return m_; }
  int squares_per_axis() const { return n_ / m_; }
  int num_squares() const { return squares_per_axis() * squares_per_axis(); }
  int num_points() const { return 2 * n_ * n_ / m_; }
  int num_states() const { return 4 * n_ * n_ / m_; }

  int square_index(int si, int sj) const;
  std::pair<int, int> square_coords(int square) const {
    return {square % squares_per_axis(), square / squares_per_axis()};
  }

  int state_index(int square, BoundaryPoint entry) const {
    return square * 4 * m_ + boundary_index(entry, m_);
  }
  int state_square(int state) const { return state / (4 * m_); }
  BoundaryPoint state_entry(int state) const { return boundary_point(state % (4 * m_), m_); }

  SkeletonState state(int index) const;
  int state_index(SkeletonState s) const;

  // Point of Bou_{N,M} sitting at boundary point b of the given square.
  int point_of(int square, BoundaryPoint b) const;
  // Torus edge crossed by a boundary point.
  int point_edge(int point) const;
  // Real-plane position of a point on the torus, in [-1/2, N).
  Eigen::Vector2d point_position(int point) const;
  // Square reached by leaving `square` through boundary point b.
  int neighbour(int square, Side side) const;
  // State reached by leaving `square` through its boundary point b.
  int exit_state(int square, BoundaryPoint b) const;
  // Point moved by (dsi * M, dsj * M).
  int translate_point(int point, int dsi, int dsj) const;

private:
  int n_;
  int m_;
};

std::vector<SkeletonState> skeleton_states(int n, int m);

} // namespace latflow
