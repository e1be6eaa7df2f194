#include "latflow/solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace latflow {
namespace {

constexpr int kDensePaths = 2000;

struct PathGroup {
  double demand;
  std::vector<std::vector<int>> paths; // edge lists
};

void enumerate(const Graph &g, const ExtendedSquare &sq, int v, int target, int cap,
               std::vector<char> &on_path, std::vector<int> &edges,
               std::vector<std::vector<int>> &out, long budget, long &count) {
  if (static_cast<int>(edges.size()) >= cap)
    return;
  for (const auto &arc : g.arcs(v)) {
    if (on_path[arc.to])
      continue;
    edges.push_back(arc.edge);
    if (arc.to == target) {
      if (++count > budget)
        throw std::runtime_error("brute_force_local: path budget exceeded");
      out.push_back(edges);
    } else if (!sq.is_boundary_vertex(arc.to)) {
      on_path[arc.to] = 1;
      enumerate(g, sq, arc.to, target, cap, on_path, edges, out, budget, count);
      on_path[arc.to] = 0;
    }
    edges.pop_back();
  }
}

// Euclidean projection of v onto {x >= 0, sum x = total}.
void project_simplex(double *v, int n, double total) {
  if (n == 0)
    return;
  std::vector<double> u(v, v + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double acc = 0.0, tau = 0.0;
  for (int k = 0; k < n; ++k) {
    acc += u[k];
    const double t = (acc - total) / (k + 1);
    if (k == n - 1 || u[k + 1] <= t) {
      tau = t;
      break;
    }
  }
  for (int k = 0; k < n; ++k)
    v[k] = std::max(0.0, v[k] - tau);
}

struct IpmResult {
  Eigen::VectorXd x; // path weights
  Eigen::VectorXd w; // capacity multipliers, one per row of a
  bool ok = false;
  int iterations = 0;
};

// Mehrotra predictor-corrector for
//   min sum_e c_e (a x)_e^2  s.t.  g x = d, x >= 0, a x <= cap.
// Dense normal equations; meant for a few thousand paths at most. With
// with_cap false the capacity rows are dropped.
IpmResult interior_point(const Eigen::MatrixXd &a, const Eigen::VectorXd &c,
                         const Eigen::MatrixXd &g, const Eigen::VectorXd &d, double cap,
                         bool with_cap, const Eigen::VectorXd &x0) {
  using Eigen::VectorXd;
  const int n = static_cast<int>(a.cols());
  const int p = with_cap ? static_cast<int>(a.rows()) : 0;
  const Eigen::MatrixXd h = 2.0 * a.transpose() * c.asDiagonal() * a;
  const Eigen::MatrixXd ac = a.topRows(p);
  IpmResult r;
  VectorXd x = x0, z = VectorXd::Ones(n), y = VectorXd::Zero(g.rows());
  VectorXd s = (VectorXd::Constant(p, cap) - ac * x).cwiseMax(0.1 * cap);
  VectorXd w = VectorXd::Ones(p);
  const double dscale = 1.0 + d.lpNorm<Eigen::Infinity>();

  auto max_step = [](const VectorXd &v, const VectorXd &dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0)
        alpha = std::min(alpha, -v[i] / dv[i]);
    return alpha;
  };

  for (int it = 0; it < 200; ++it) {
    r.iterations = it;
    const VectorXd rd = h * x - g.transpose() * y + ac.transpose() * w - z;
    const VectorXd rp = g * x - d;
    const VectorXd rc = ac * x + s - VectorXd::Constant(p, cap);
    const double mu = (x.dot(z) + s.dot(w)) / (n + p);
    const double obj = x.dot(h * x) / 2.0;
    // The dual residual stalls near 1e-8 once the active set is nearly
    // singular; the caller certifies the result with its own lower bound.
    if (rp.lpNorm<Eigen::Infinity>() <= 1e-11 * dscale &&
        (p == 0 || rc.lpNorm<Eigen::Infinity>() <= 1e-11 * (1.0 + cap)) &&
        rd.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + (h * x).lpNorm<Eigen::Infinity>()) &&
        mu * (n + p) <= 1e-12 * (1.0 + obj)) {
      r.ok = true;
      break;
    }
    const VectorXd ws = w.cwiseQuotient(s);
    const Eigen::MatrixXd k = h + Eigen::MatrixXd(z.cwiseQuotient(x).asDiagonal()) +
                              ac.transpose() * ws.asDiagonal() * ac;
    // A failed factorization near the end still leaves a usable iterate.
    const bool near = rp.lpNorm<Eigen::Infinity>() <= 1e-9 * dscale &&
                      (p == 0 || rc.lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + cap)) &&
                      mu * (n + p) <= 1e-6 * (1.0 + obj);
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
      r.ok = near;
      break;
    }
    const Eigen::MatrixXd kg = llt.solve(g.transpose());
    const Eigen::LLT<Eigen::MatrixXd> schur(g * kg);
    if (schur.info() != Eigen::Success) {
      r.ok = near;
      break;
    }

    // Newton direction for complementarity targets tx (x z) and ts (s w).
    auto direction = [&](const VectorXd &tx, const VectorXd &ts, VectorXd &dx, VectorXd &dy,
                         VectorXd &dz, VectorXd &ds, VectorXd &dw) {
      const VectorXd r1 = -rd - ac.transpose() * (ts + w.cwiseProduct(rc)).cwiseQuotient(s) +
                          tx.cwiseQuotient(x);
      const VectorXd kr = llt.solve(r1);
      dy = schur.solve(-rp - g * kr);
      dx = kr + kg * dy;
      dz = (tx - z.cwiseProduct(dx)).cwiseQuotient(x);
      ds = -rc - ac * dx;
      dw = (ts - w.cwiseProduct(ds)).cwiseQuotient(s);
    };
    VectorXd dx, dy, dz, ds, dw;
    direction(-x.cwiseProduct(z), -s.cwiseProduct(w), dx, dy, dz, ds, dw);
    const double aff = std::min({max_step(x, dx), max_step(z, dz), max_step(s, ds),
                                 max_step(w, dw)});
    const double mu_aff = ((x + aff * dx).dot(z + aff * dz) + (s + aff * ds).dot(w + aff * dw)) /
                          (n + p);
    const double sigma = std::pow(mu_aff / mu, 3);
    const VectorXd tx = VectorXd::Constant(n, sigma * mu) - x.cwiseProduct(z) - dx.cwiseProduct(dz);
    const VectorXd ts = VectorXd::Constant(p, sigma * mu) - s.cwiseProduct(w) - ds.cwiseProduct(dw);
    direction(tx, ts, dx, dy, dz, ds, dw);
    const double alpha =
        std::min(1.0, 0.995 * std::min({max_step(x, dx), max_step(z, dz), max_step(s, ds),
                                         max_step(w, dw)}));
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    w += alpha * dw;
  }
  r.x = x;
  r.w = VectorXd::Zero(a.rows());
  r.w.head(p) = w;
  return r;
}

} // namespace

SolveResult brute_force_local(int m, const Environment &env, const TransportMeasure &q,
                              const SolverConfig &cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ExtendedSquare sq(m);
  if (env.kind() != EnvironmentKind::Square || env.size() != m || q.m != m)
    throw std::invalid_argument("brute_force_local: size mismatch");
  const Graph &g = sq.graph();
  const int ne = sq.num_edges();
  const Eigen::VectorXd &c = env.cost();

  SolveResult res;
  res.flow = FlowVolume::Zero(ne);
  if (!local_cap_admissible(q, cfg.cap)) {
    res.infeasible = true;
    res.objective = res.gap = std::numeric_limits<double>::infinity();
    return res;
  }

  std::vector<PathGroup> groups;
  long count = 0;
  for (int a = 0; a < 4 * m; ++a) {
    for (int b = 0; b < 4 * m; ++b) {
      if (q.mass(a, b) <= 0.0 || a == b)
        continue; // a == b is the zero-length path
      PathGroup grp{q.mass(a, b), {}};
      std::vector<char> on_path(g.num_vertices(), 0);
      const int src = sq.boundary_vertex(boundary_point(a, m));
      on_path[src] = 1;
      std::vector<int> edges;
      enumerate(g, sq, src, sq.boundary_vertex(boundary_point(b, m)), cfg.oracle_length_cap,
                on_path, edges, grp.paths, cfg.oracle_path_budget, count);
      if (grp.paths.empty())
        throw std::runtime_error("brute_force_local: length cap admits no path for a pair");
      groups.push_back(std::move(grp));
    }
  }

  // Variables laid out group by group.
  std::vector<int> offset{0};
  for (const auto &grp : groups)
    offset.push_back(offset.back() + static_cast<int>(grp.paths.size()));
  const int nv = offset.back();
  if (nv == 0) {
    res.converged = true;
    return res;
  }
  std::vector<const std::vector<int> *> path_of(nv);
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (std::size_t p = 0; p < groups[k].paths.size(); ++p)
      path_of[offset[k] + p] = &groups[k].paths[p];

  auto volume = [&](const Eigen::VectorXd &x) {
    FlowVolume f = FlowVolume::Zero(ne);
    for (int v = 0; v < nv; ++v)
      for (int e : *path_of[v])
        f[e] += x[v];
    return f;
  };
  // Method of multipliers on f <= cap: per-edge multipliers mu, quadratic
  // weight omega raised only when the violation stalls.
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(ne);
  double omega = 0.0;
  auto slope = [&](const FlowVolume &f) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(ne);
    if (omega > 0.0)
      for (int e = 0; e < ne; ++e)
        s[e] = std::max(0.0, mu[e] + 2.0 * omega * (f[e] - cfg.cap));
    return s;
  };
  auto path_gradient = [&](const FlowVolume &f, const Eigen::VectorXd &edge_extra) {
    const Eigen::VectorXd ge = 2.0 * c.cwiseProduct(f) + edge_extra;
    Eigen::VectorXd gx(nv);
    for (int v = 0; v < nv; ++v) {
      double s = 0.0;
      for (int e : *path_of[v])
        s += ge[e];
      gx[v] = s;
    }
    return gx;
  };
  auto project = [&](Eigen::VectorXd &x) {
    for (std::size_t k = 0; k < groups.size(); ++k)
      project_simplex(x.data() + offset[k], offset[k + 1] - offset[k], groups[k].demand);
  };
  // Gap of the linearization: pairs moved to their cheapest path.
  auto linear_gap = [&](const Eigen::VectorXd &x, const Eigen::VectorXd &gx) {
    double gap = 0.0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      double best = std::numeric_limits<double>::infinity(), used = 0.0;
      for (int v = offset[k]; v < offset[k + 1]; ++v) {
        best = std::min(best, gx[v]);
        used += x[v] * gx[v];
      }
      gap += used - groups[k].demand * best;
    }
    return std::max(0.0, gap);
  };

  // Lipschitz bound from |A|_1 |A|_inf.
  std::vector<int> through(ne, 0);
  int longest = 0;
  for (int v = 0; v < nv; ++v) {
    longest = std::max<int>(longest, static_cast<int>(path_of[v]->size()));
    for (int e : *path_of[v])
      ++through[e];
  }
  const double norm2 = double(longest) * *std::max_element(through.begin(), through.end());

  Eigen::VectorXd x(nv);
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (int v = offset[k]; v < offset[k + 1]; ++v)
      x[v] = groups[k].demand / (offset[k + 1] - offset[k]);

  long it = 0;
  double lower = -std::numeric_limits<double>::infinity();
  bool solved = false;
  if (nv <= kDensePaths) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ne, nv), g = Eigen::MatrixXd::Zero(groups.size(), nv);
    Eigen::VectorXd d(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
      d[k] = groups[k].demand;
      for (int v = offset[k]; v < offset[k + 1]; ++v) {
        g(k, v) = 1.0;
        for (int e : *path_of[v])
          a(e, v) += 1.0;
      }
    }
    // No edge can carry more than the total demand.
    const bool with_cap = cfg.cap < d.sum();
    const IpmResult ipm = interior_point(a, c, g, d, cfg.cap, with_cap, x);
    it = ipm.iterations;
    if (ipm.ok) {
      x = ipm.x.cwiseMax(0.0);
      for (std::size_t k = 0; k < groups.size(); ++k) {
        const int len = offset[k + 1] - offset[k];
        x.segment(offset[k], len) *= groups[k].demand / x.segment(offset[k], len).sum();
      }
      const FlowVolume f = volume(x);
      const Eigen::VectorXd lam = ipm.w.cwiseMax(0.0);
      lower = cost(f, c) + lam.dot(f - FlowVolume::Constant(ne, cfg.cap)) -
              linear_gap(x, path_gradient(f, lam));
      solved = true;
    }
  }
  if (!solved) {
    const double inner_tol = 0.1 * cfg.tol;
    constexpr double kFeasTol = 1e-9;
    const long max_iter = 2000000;
    double last_violation = std::numeric_limits<double>::infinity();
    for (int round = 0;; ++round) {
      const double lip = 2.0 * (c.maxCoeff() + omega) * norm2;
      Eigen::VectorXd y = x;
      double t = 1.0;
      for (long inner = 0; it < max_iter; ++it, ++inner) {
        const FlowVolume fy = volume(y);
        const Eigen::VectorXd gy = path_gradient(fy, slope(fy));
        Eigen::VectorXd xn = y - gy / lip;
        project(xn);
        // Gradient-based adaptive restart.
        if (gy.dot(xn - x) > 0.0) {
          t = 1.0;
          y = x;
          continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = xn + ((t - 1.0) / tn) * (xn - x);
        x = std::move(xn);
        t = tn;
        if (inner % 25 == 0) {
          const FlowVolume f = volume(x);
          const double g = linear_gap(x, path_gradient(f, slope(f)));
          if (g <= inner_tol * std::max(cost(f, c), 1e-300))
            break;
        }
      }
      const FlowVolume f = volume(x);
      // Lagrangian bound at the current multipliers: for fixed mu the
      // function sum c f^2 + mu (f - cap) is convex, so its value minus the
      // linearization gap bounds the optimum from below.
      const Eigen::VectorXd lam = omega > 0.0 ? slope(f) : Eigen::VectorXd::Zero(ne);
      const double lagr = cost(f, c) + lam.dot(f - FlowVolume::Constant(ne, cfg.cap));
      lower = std::max(lower, lagr - linear_gap(x, path_gradient(f, lam)));
      const double violation = std::max(0.0, f.maxCoeff() - cfg.cap);
      const bool certified = cost(f, c) - lower <= cfg.tol * std::max(cost(f, c), 1e-300);
      if ((violation <= kFeasTol * cfg.cap && certified) || round >= cfg.penalty_rounds ||
          it >= max_iter)
        break;
      if (omega == 0.0) {
        omega = cfg.penalty_weight * std::max(1.0, c.maxCoeff());
      } else {
        mu = lam;
        if (violation > 0.25 * last_violation)
          omega *= 4.0;
      }
      last_violation = violation;
    }
  }
  const double gap = linear_gap(x, path_gradient(volume(x), Eigen::VectorXd::Zero(ne)));

  res.flow = volume(x);
  res.objective = cost(res.flow, c);
  res.fw_gap = gap;
  res.lower_bound = std::min(lower, res.objective);
  res.gap = res.objective - res.lower_bound;
  res.iterations = static_cast<int>(it);
  res.max_volume = res.flow.maxCoeff();
  res.max_violation = std::max(0.0, res.max_volume - cfg.cap);
  res.pre_repair_violation = res.max_violation;
  res.infeasible = res.max_violation > 1e-6 * cfg.cap;
  res.converged = !res.infeasible && res.gap <= cfg.tol * std::max(res.objective, 1e-300);
  res.walltime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

} // namespace latflow
