#pragma once

#include "latflow/lattice.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace latflow {

/// Nonnegative measure on Bou_M x Bou_M stored densely; row = entrance,
/// column = exit, both in boundary_index order.
template <class Scalar> struct BasicTransport {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int m = 0;
  Matrix mass;

  BasicTransport() = default;
  explicit BasicTransport(int m_) : m(m_) {
    if (m_ < 1)
      throw std::invalid_argument("transport measure needs M >= 1");
    mass.setZero(4 * m_, 4 * m_);
  }
  BasicTransport(int m_, Matrix q) : m(m_), mass(std::move(q)) {
    if (mass.rows() != 4 * m || mass.cols() != 4 * m)
      throw std::invalid_argument("transport measure must be 4M x 4M");
  }

  Scalar &operator()(BoundaryPoint a, BoundaryPoint b) {
    return mass(boundary_index(a, m), boundary_index(b, m));
  }
  Scalar operator()(BoundaryPoint a, BoundaryPoint b) const {
    return mass(boundary_index(a, m), boundary_index(b, m));
  }
  Scalar total() const { return mass.sum(); }
  Vector entrance() const { return mass.rowwise().sum(); }
  Vector exit() const { return mass.colwise().sum().transpose(); }

  BasicTransport &operator+=(const BasicTransport &o) {
    mass += o.mass;
    return *this;
  }
  friend BasicTransport operator+(BasicTransport a, const BasicTransport &b) { return a += b; }
  friend BasicTransport operator*(const Scalar &s, BasicTransport a) {
    a.mass *= s;
    return a;
  }
};

using TransportMeasure = BasicTransport<double>;

template <class Scalar>
std::pair<typename BasicTransport<Scalar>::Vector, typename BasicTransport<Scalar>::Vector>
marginals(const BasicTransport<Scalar> &q) {
  return {q.entrance(), q.exit()};
}

// Exit marginal pushed forward by reflect, in boundary_index order.
template <class Scalar>
typename BasicTransport<Scalar>::Vector reflected_exit(const BasicTransport<Scalar> &q) {
  const auto exi = q.exit();
  typename BasicTransport<Scalar>::Vector out(exi.size());
  for (int k = 0; k < 4 * q.m; ++k)
    out[boundary_index(reflect(boundary_point(k, q.m)), q.m)] = exi[k];
  return out;
}

// L1 distance between reflect_*(Q_exi) and Q_ent.
double qm_defect(const TransportMeasure &q);
bool in_QM(const TransportMeasure &q, double tol = 1e-12);

Eigen::Vector2d drift(const TransportMeasure &q);
Eigen::Vector2d drift1(const TransportMeasure &q);

// Total displacement sum (b2 - b1) Q(b1, b2), before the 1/M^2 scaling.
Eigen::Vector2d displacement(const TransportMeasure &q);

enum class Direction { Right, Left, Up, Down };
TransportMeasure directional(int m, Direction d);

// Unit mass per entrance on all ordered pairs of distinct boundary points.
// In Q_M, zero drift, and every Q* transition positive.
TransportMeasure all_pairs_measure(int m);

enum class DriftBasis {
  // u1 Q-> + u2 Q^ : drift exactly u.
  AxisAligned,
  // Per axis the representative of u mod 1 nearest zero, realized with the
  // reverse directional when negative.
  MinimalDisplacement,
};

struct DriftOptions {
  DriftBasis basis = DriftBasis::MinimalDisplacement;
  double eps0 = 1e-3; // weight of all_pairs_measure
};

TransportMeasure drift_measure(int m, Eigen::Vector2d u, const DriftOptions &opt = {});

struct MixtureComponent {
  double weight;
  TransportMeasure q;
  Eigen::Vector2d target; // drift_1 target of the component
};

struct IsotropicMixture {
  int m = 0;
  int grid = 0;
  std::vector<MixtureComponent> components;
  // Per-axis Wasserstein-infinity distance of the drift_1 law from uniform.
  double resolution_bound() const { return 0.5 / grid; }
  // Mean measure Q0 = sum of weight * component.
  TransportMeasure mean() const;
};

IsotropicMixture isotropic_grid(int m, int g, const DriftOptions &opt = {});

// Smoothed measure on Bou_{M+2K}. Only the points facing the original
// square (offsets K..K+M-1 on each side) carry mass.
struct SmoothedMeasure {
  int m = 0; // original square size
  int k = 0; // block size
  TransportMeasure q; // on Bou_{M+2K}
};

SmoothedMeasure smooth(const TransportMeasure &q, int k);
// Floors every entry to a multiple of delta/K.
SmoothedMeasure trim(const SmoothedMeasure &qs, double delta);

// True if entries depend only on (block, block) pairs and vanish off the
// parallel points; exact comparison when tol == 0.
bool is_block_constant(const SmoothedMeasure &qs, double tol = 0.0);

// log10 of (1 + B/delta)^((4M/K)^2).
double trimmed_cardinality_log10(int m, int k, double b, double delta);

// Upper bound on the mass of any Q that is feasible at cap B.
inline double feasible_mass_bound(int m, double b) { return 2.0 * m * b; }

} // namespace latflow
