#include "latflow/transport.hpp"

#include <algorithm>

namespace latflow {

double qm_defect(const TransportMeasure &q) {
  return (reflected_exit(q) - q.entrance()).cwiseAbs().sum();
}

bool in_QM(const TransportMeasure &q, double tol) { return qm_defect(q) <= tol; }

Eigen::Vector2d displacement(const TransportMeasure &q) {
  const int n = 4 * q.m;
  std::vector<Eigen::Vector2d> pos(n);
  for (int k = 0; k < n; ++k)
    pos[k] = boundary_coordinates(boundary_point(k, q.m), q.m);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int b2 = 0; b2 < n; ++b2)
    for (int b1 = 0; b1 < n; ++b1)
      if (q.mass(b1, b2) != 0.0)
        sum += (pos[b2] - pos[b1]) * q.mass(b1, b2);
  return sum;
}

Eigen::Vector2d drift(const TransportMeasure &q) {
  return displacement(q) / (double(q.m) * q.m);
}

Eigen::Vector2d drift1(const TransportMeasure &q) {
  Eigen::Vector2d d = drift(q);
  for (int a = 0; a < 2; ++a) {
    d[a] -= std::floor(d[a]);
    if (d[a] >= 1.0)
      d[a] = 0.0;
  }
  return d;
}

TransportMeasure directional(int m, Direction d) {
  TransportMeasure q(m);
  for (int o = 0; o < m; ++o) {
    switch (d) {
    case Direction::Right:
      q({Side::Left, o}, {Side::Right, o}) = 1.0;
      break;
    case Direction::Left:
      q({Side::Right, o}, {Side::Left, o}) = 1.0;
      break;
    case Direction::Up:
      q({Side::Bottom, o}, {Side::Top, o}) = 1.0;
      break;
    case Direction::Down:
      q({Side::Top, o}, {Side::Bottom, o}) = 1.0;
      break;
    }
  }
  return q;
}

TransportMeasure all_pairs_measure(int m) {
  TransportMeasure q(m);
  const int n = 4 * m;
  if (n > 1) {
    q.mass.setConstant(1.0 / (n - 1));
    q.mass.diagonal().setZero();
  }
  return q;
}

TransportMeasure drift_measure(int m, Eigen::Vector2d u, const DriftOptions &opt) {
  for (int a = 0; a < 2; ++a)
    if (!(u[a] >= 0.0 && u[a] < 1.0))
      throw std::invalid_argument("drift_measure: target must lie in [0,1)^2");
  if (opt.eps0 < 0.0)
    throw std::invalid_argument("drift_measure: eps0 must be nonnegative");
  TransportMeasure q = opt.eps0 * all_pairs_measure(m);
  if (opt.basis == DriftBasis::AxisAligned) {
    q += u[0] * directional(m, Direction::Right);
    q += u[1] * directional(m, Direction::Up);
    return q;
  }
  const double ux = u[0] <= 0.5 ? u[0] : u[0] - 1.0;
  const double uy = u[1] <= 0.5 ? u[1] : u[1] - 1.0;
  q += std::abs(ux) * directional(m, ux >= 0 ? Direction::Right : Direction::Left);
  q += std::abs(uy) * directional(m, uy >= 0 ? Direction::Up : Direction::Down);
  return q;
}

TransportMeasure IsotropicMixture::mean() const {
  TransportMeasure q(m);
  for (const auto &c : components)
    q += c.weight * c.q;
  return q;
}

IsotropicMixture isotropic_grid(int m, int g, const DriftOptions &opt) {
  if (g < 1)
    throw std::invalid_argument("isotropic_grid: G must be at least 1");
  IsotropicMixture mix;
  mix.m = m;
  mix.grid = g;
  const double w = 1.0 / (double(g) * g);
  for (int b = 0; b < g; ++b) {
    for (int a = 0; a < g; ++a) {
      const Eigen::Vector2d u((a + 0.5) / g, (b + 0.5) / g);
      mix.components.push_back({w, drift_measure(m, u, opt), u});
    }
  }
  return mix;
}

namespace {

// Position on the big square of the parallel point facing original point b.
int outer_index(BoundaryPoint b, int m, int k) {
  return boundary_index({b.side, b.offset + k}, m + 2 * k);
}

} // namespace

SmoothedMeasure smooth(const TransportMeasure &q, int k) {
  const int m = q.m;
  if (k < 1 || m % k != 0)
    throw std::invalid_argument("smooth: K must divide M");
  const int blocks = 4 * m / k;
  // Block sums, then spread evenly over the K x K outer points.
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(blocks, blocks);
  for (int b2 = 0; b2 < 4 * m; ++b2)
    for (int b1 = 0; b1 < 4 * m; ++b1)
      block(b1 / k, b2 / k) += q.mass(b1, b2);
  SmoothedMeasure out{m, k, TransportMeasure(m + 2 * k)};
  const double scale = 1.0 / (double(k) * k);
  for (int b2 = 0; b2 < 4 * m; ++b2) {
    const int o2 = outer_index(boundary_point(b2, m), m, k);
    for (int b1 = 0; b1 < 4 * m; ++b1) {
      const int o1 = outer_index(boundary_point(b1, m), m, k);
      out.q.mass(o1, o2) = block(b1 / k, b2 / k) * scale;
    }
  }
  return out;
}

SmoothedMeasure trim(const SmoothedMeasure &qs, double delta) {
  if (!(delta > 0.0))
    throw std::invalid_argument("trim: delta must be positive");
  const double unit = delta / qs.k;
  SmoothedMeasure out = qs;
  out.q.mass = qs.q.mass.unaryExpr([unit](double x) {
    const double r = x / unit;
    const double nearest = std::round(r);
    // Entries that are multiples of the unit up to rounding stay put.
    const double steps = std::abs(r - nearest) < 1e-9 ? nearest : std::floor(r);
    return std::min(x, steps * unit);
  });
  return out;
}

bool is_block_constant(const SmoothedMeasure &qs, double tol) {
  const int m = qs.m, k = qs.k, big = m + 2 * k;
  std::vector<int> inner(4 * big, -1);
  for (int b = 0; b < 4 * m; ++b)
    inner[outer_index(boundary_point(b, m), m, k)] = b;
  for (int c2 = 0; c2 < 4 * big; ++c2) {
    for (int c1 = 0; c1 < 4 * big; ++c1) {
      const double v = qs.q.mass(c1, c2);
      if (inner[c1] < 0 || inner[c2] < 0) {
        if (std::abs(v) > tol)
          return false;
        continue;
      }
      // Compare with the first point of each block.
      const int r1 = inner[c1] / k * k, r2 = inner[c2] / k * k;
      const double ref = qs.q.mass(outer_index(boundary_point(r1, m), m, k),
                                   outer_index(boundary_point(r2, m), m, k));
      if (std::abs(v - ref) > tol)
        return false;
    }
  }
  return true;
}

double trimmed_cardinality_log10(int m, int k, double b, double delta) {
  const double blocks = 4.0 * m / k;
  return blocks * blocks * std::log10(1.0 + b / delta);
}

} // namespace latflow
