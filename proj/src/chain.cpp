#include "latflow/construction.hpp"
#include "latflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace latflow {
namespace {

// Inverse-CDF draw from nonnegative weights with the given cumulative sums.
int draw(const std::vector<double> &cumulative, double u) {
  const double x = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  int k = static_cast<int>(it - cumulative.begin());
  if (k < static_cast<int>(cumulative.size()))
    return k;
  // Rounding pushed x past the total: take the last positive weight.
  k = static_cast<int>(cumulative.size()) - 1;
  while (k > 0 && cumulative[k] == cumulative[k - 1])
    --k;
  return k;
}

std::vector<double> cumsum(const Eigen::Ref<const Eigen::VectorXd> &w) {
  std::vector<double> c(w.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    c[k] = acc += w[k];
  return c;
}

std::vector<Eigen::Vector2d> boundary_positions(int m) {
  std::vector<Eigen::Vector2d> pos(4 * m);
  for (int k = 0; k < 4 * m; ++k)
    pos[k] = boundary_coordinates(boundary_point(k, m), m);
  return pos;
}

std::vector<int> reflect_table(int m) {
  std::vector<int> r(4 * m);
  for (int k = 0; k < 4 * m; ++k)
    r[k] = boundary_index(reflect(boundary_point(k, m)), m);
  return r;
}

} // namespace

SkeletonChain build_chain(const TransportMeasure &q, int n, int m, double qm_tol) {
  require_divides(m, n);
  if (q.m != m)
    throw std::invalid_argument("build_chain: measure size differs from M");
  const double mass = q.total();
  if (!(mass > 0.0))
    throw std::invalid_argument("build_chain: measure has zero mass");
  if (!in_QM(q, qm_tol * std::max(1.0, mass)))
    throw std::invalid_argument("build_chain: measure is not in Q_M");

  SkeletonChain c;
  c.n = n;
  c.m = m;
  c.q = q;
  c.mass = mass;
  const Eigen::VectorXd ent = q.entrance();
  c.qbar = Eigen::MatrixXd::Zero(4 * m, 4 * m);
  for (int b = 0; b < 4 * m; ++b)
    if (ent[b] > 0.0)
      c.qbar.row(b) = q.mass.row(b) / ent[b];

  const SkeletonLayout layout(n, m);
  const int ns = layout.num_states();
  const double qnorm = double(n / m) * double(n / m) * mass;
  std::vector<Eigen::Triplet<double>> trips;
  c.pi.resize(ns);
  for (int s = 0; s < ns; ++s) {
    const int sq = layout.state_square(s);
    const int b0 = s % (4 * m);
    c.pi[s] = ent[b0] / qnorm;
    for (int b1 = 0; b1 < 4 * m; ++b1)
      if (c.qbar(b0, b1) > 0.0)
        trips.emplace_back(s, layout.exit_state(sq, boundary_point(b1, m)), c.qbar(b0, b1));
  }
  c.q1.resize(ns, ns);
  c.q1.setFromTriplets(trips.begin(), trips.end());
  c.t = n * mass / (double(m) * m);
  c.t_floor = static_cast<int>(std::floor(c.t));
  c.ceil_weight = c.t - c.t_floor;
  return c;
}

double stationarity_defect(const SkeletonChain &chain) {
  const Eigen::VectorXd next = (chain.pi.transpose() * chain.q1).transpose();
  return (next - chain.pi).lpNorm<1>();
}

ProjectionChain projection(const TransportMeasure &q) {
  const int m = q.m;
  const double mass = q.total();
  if (!(mass > 0.0))
    throw std::invalid_argument("projection: measure has zero mass");
  const auto refl = reflect_table(m);
  const Eigen::VectorXd ent = q.entrance();
  ProjectionChain p;
  p.m = m;
  p.qstar = Eigen::MatrixXd::Zero(4 * m, 4 * m);
  for (int b0 = 0; b0 < 4 * m; ++b0) {
    if (ent[b0] <= 0.0)
      continue;
    for (int b1 = 0; b1 < 4 * m; ++b1)
      p.qstar(b0, b1) = q.mass(b0, refl[b1]) / ent[b0];
  }
  p.pi_star = ent / mass;
  return p;
}

ProjectionChain projection(const SkeletonChain &chain) { return projection(chain.q); }

bool is_irreducible(const Eigen::MatrixXd &a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0)
    return false;
  auto reaches_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    int count = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int w = 0; w < n; ++w) {
        const double x = forward ? a(v, w) : a(w, v);
        if (x > 0.0 && !seen[w]) {
          seen[w] = 1;
          ++count;
          queue.push_back(w);
        }
      }
    }
    return count == n;
  };
  return reaches_all(true) && reaches_all(false);
}

bool check_irreducible(const ProjectionChain &p) { return is_irreducible(p.qstar); }

TransportMeasure drift_representative(int m, const Eigen::Vector2d &u) {
  TransportMeasure q = all_pairs_measure(m);
  q += std::abs(u[0]) * directional(m, u[0] >= 0 ? Direction::Right : Direction::Left);
  q += std::abs(u[1]) * directional(m, u[1] >= 0 ? Direction::Up : Direction::Down);
  return q;
}

TransportMeasure repair_irreducible(const TransportMeasure &q, double eps) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::invalid_argument("repair_irreducible: eps must lie in (0, 1]");
  return (1.0 - eps) * q + eps * drift_representative(q.m, drift(q));
}

Eigen::Vector2d gbar(const ProjectionChain &p) {
  const int m = p.m;
  const auto pos = boundary_positions(m);
  const auto refl = reflect_table(m);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int b0 = 0; b0 < 4 * m; ++b0)
    for (int b1 = 0; b1 < 4 * m; ++b1)
      if (p.qstar(b0, b1) > 0.0)
        g += p.pi_star[b0] * p.qstar(b0, b1) * (pos[refl[b1]] - pos[b0]);
  return g;
}

Eigen::Vector2d gbar_closed_form(const TransportMeasure &q) {
  return double(q.m) * q.m * drift(q) / q.total();
}

LlnReport drift_lln_check(const TransportMeasure &q, int n, int replicas, std::uint64_t seed) {
  if (replicas < 1)
    throw std::invalid_argument("drift_lln_check: need at least one replica");
  const int m = q.m;
  if (!(q.total() > 0.0))
    throw std::invalid_argument("drift_lln_check: measure has zero mass");
  const auto pos = boundary_positions(m);
  const auto refl = reflect_table(m);
  const Eigen::VectorXd ent = q.entrance();
  const auto start = cumsum(ent);
  std::vector<std::vector<double>> rows(4 * m);
  for (int b = 0; b < 4 * m; ++b)
    rows[b] = cumsum(q.mass.row(b).transpose());
  const double t = n * q.total() / (double(m) * m);
  const int t_floor = static_cast<int>(std::floor(t));
  const double frac = t - t_floor;

  std::vector<Eigen::Vector2d> out(replicas);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < replicas; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    const int steps = t_floor + (rng.uniform() < frac ? 1 : 0);
    int x = draw(start, rng.uniform());
    Eigen::Vector2d d = Eigen::Vector2d::Zero();
    for (int s = 0; s < steps; ++s) {
      const int b1 = draw(rows[x], rng.uniform());
      d += pos[b1] - pos[x];
      x = refl[b1];
    }
    out[r] = d / n;
  }

  LlnReport rep;
  rep.n = n;
  rep.t = t;
  rep.replicas = replicas;
  for (const auto &d : out)
    rep.mean += d;
  rep.mean /= replicas;
  if (replicas > 1) {
    Eigen::Vector2d var = Eigen::Vector2d::Zero();
    for (const auto &d : out)
      var += (d - rep.mean).cwiseAbs2();
    rep.stderr_ = (var / (replicas - 1) / replicas).cwiseSqrt();
  }
  rep.target = drift(q);
  rep.distance = (rep.mean - rep.target).lpNorm<Eigen::Infinity>();
  return rep;
}

Eigen::MatrixXd projected_transition_frequencies(const SkeletonChain &chain, long steps,
                                                 std::uint64_t seed) {
  const int m = chain.m;
  const SkeletonLayout layout(chain.n, m);
  std::vector<std::vector<double>> rows(4 * m);
  for (int b = 0; b < 4 * m; ++b)
    rows[b] = cumsum(chain.qbar.row(b).transpose());
  Rng rng(seed);
  int s = draw(cumsum(chain.pi), rng.uniform());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(4 * m, 4 * m);
  for (long k = 0; k < steps; ++k) {
    const int b0 = s % (4 * m);
    const int b1 = draw(rows[b0], rng.uniform());
    const int next = layout.exit_state(layout.state_square(s), boundary_point(b1, m));
    counts(b0, next % (4 * m)) += 1.0;
    s = next;
  }
  for (int b = 0; b < 4 * m; ++b) {
    const double r = counts.row(b).sum();
    if (r > 0.0)
      counts.row(b) /= r;
  }
  return counts;
}

} // namespace latflow
