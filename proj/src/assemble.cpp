#include "latflow/construction.hpp"
#include "latflow/routers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace latflow {
namespace {

// Where each edge of the extended square lands on the torus, relative to the
// square's lower-left corner.
struct EdgePlacement {
  int di, dj;
  Axis axis;
  bool half;  // boundary half-edge: one half of a torus edge
  bool outer; // right or top half-edge
};

std::vector<EdgePlacement> edge_placements(const ExtendedSquare &sq) {
  const int m = sq.size();
  std::vector<EdgePlacement> out(sq.num_edges());
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      out[sq.assigned_edge(i, j, Axis::Horizontal)] = {i, j, Axis::Horizontal, i == 0, false};
      out[sq.assigned_edge(i, j, Axis::Vertical)] = {i, j, Axis::Vertical, j == 0, false};
    }
  }
  for (int o = 0; o < m; ++o) {
    out[sq.half_edge({Side::Right, o})] = {m, o, Axis::Horizontal, true, true};
    out[sq.half_edge({Side::Top, o})] = {o, m, Axis::Vertical, true, true};
  }
  return out;
}

int torus_edge(const Torus &torus, const EdgePlacement &p, int si, int sj, int m) {
  return torus.edge_index(torus.wrap(si * m + p.di, sj * m + p.dj), p.axis);
}

// Adds a square flow-volume to the torus; half-edges count one half.
void add_square_volume(FlowVolume &target, const FlowVolume &vol, const Torus &torus,
                       const std::vector<EdgePlacement> &place, int si, int sj, int m) {
  for (int e = 0; e < static_cast<int>(place.size()); ++e)
    if (vol[e] != 0.0)
      target[torus_edge(torus, place[e], si, sj, m)] += place[e].half ? 0.5 * vol[e] : vol[e];
}

void validate_mixture(const IsotropicMixture &mix, int n, int m) {
  require_divides(m, n);
  if (mix.m != m || mix.components.empty())
    throw std::invalid_argument("assemble: mixture does not match M or is empty");
  for (const auto &c : mix.components) {
    build_chain(c.q, n, m); // validates Q_M and mass
    if (!check_irreducible(projection(c.q)))
      throw std::invalid_argument("assemble: mixture component is not irreducible");
  }
}


// Adds w along the torus path from (i, j) by (a, b), horizontal leg first.
void add_l_path(FlowVolume &f, const Torus &torus, int i, int j, int a, int b, double w) {
  for (int t = 0; t < std::abs(a); ++t) {
    const int ni = i + (a > 0 ? 1 : -1);
    f[torus.edge_index(torus.wrap(std::max(i, ni), j), Axis::Horizontal)] += w;
    i = ni;
  }
  for (int t = 0; t < std::abs(b); ++t) {
    const int nj = j + (b > 0 ? 1 : -1);
    f[torus.edge_index(torus.wrap(i, std::max(j, nj)), Axis::Vertical)] += w;
    j = nj;
  }
}

} // namespace

StandardizeResult standardize(const FlowVolume &f1, const FlowVolume &f2, double b0, double delta,
                              int n) {
  if (!(delta > 0.0 && delta < b0 - 0.25))
    throw std::invalid_argument("standardize: delta must lie in (0, B0 - 1/4)");
  if (f1.size() != f2.size() || f1.size() != 2 * n * n)
    throw std::invalid_argument("standardize: volume sizes do not match the torus");
  if (f1.maxCoeff() > b0 * (1 + 1e-12) || f2.maxCoeff() > delta * (1 + 1e-12))
    throw std::invalid_argument("standardize: volumes exceed B0 or delta");
  StandardizeResult r;
  r.lambda = 2.0 * delta / (delta + b0 - 0.25);
  r.flow = (1.0 - r.lambda) * (f1 + f2) +
           FlowVolume::Constant(f1.size(), r.lambda * uniform_flow_value(n));
  return r;
}

double standardize_cost_bound(int n, double b0, double delta, double c_max) {
  return 8.0 * delta * double(n) * n * b0 * b0 * c_max / (b0 - 0.25);
}

int default_smoothing_width(int n) {
  int l = (n + 7) / 8;
  if (l % 2 == 0)
    ++l;
  return l;
}

Eigen::VectorXd assembly_endpoint_law(const IsotropicMixture &mix, int n, int m, int l_n) {
  validate_mixture(mix, n, m);
  if (l_n < 1 || l_n % 2 == 0 || l_n > n)
    throw std::invalid_argument("assembly_endpoint_law: L must be odd with 1 <= L <= N");
  const SkeletonLayout layout(n, m);
  const int nb = 4 * m;
  Eigen::VectorXd square_law = Eigen::VectorXd::Zero(layout.num_squares());
  for (const auto &comp : mix.components) {
    const SkeletonChain c = build_chain(comp.q, n, m);
    const Eigen::VectorXd exi = comp.q.exit();
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, layout.num_states());
    for (int b = 0; b < nb; ++b)
      row(0, layout.exit_state(0, boundary_point(b, m))) += exi[b] / c.mass;
    for (int i = 0; i < c.t_floor; ++i)
      row = row * c.q1;
    if (c.ceil_weight > 0.0) {
      Eigen::MatrixXd next = row * c.q1;
      row = (1.0 - c.ceil_weight) * row + c.ceil_weight * next;
    }
    for (int s = 0; s < layout.num_states(); ++s)
      square_law[layout.state_square(s)] += comp.weight * row(0, s);
  }

  const Torus torus(n);
  Eigen::VectorXd law = Eigen::VectorXd::Zero(n * n);
  const double cell = 1.0 / (double(m) * m);
  for (int sq = 0; sq < layout.num_squares(); ++sq) {
    const auto [si, sj] = layout.square_coords(sq);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        law[torus.vertex_index({si * m + i, sj * m + j})] += square_law[sq] * cell;
  }
  if (l_n == 1)
    return law;
  const int h = (l_n - 1) / 2;
  Eigen::VectorXd smoothed = Eigen::VectorXd::Zero(n * n);
  const double kernel = 1.0 / (double(l_n) * l_n);
  for (int v = 0; v < n * n; ++v) {
    if (law[v] == 0.0)
      continue;
    const TorusVertex x = torus.vertex(v);
    for (int b = -h; b <= h; ++b)
      for (int a = -h; a <= h; ++a)
        smoothed[torus.vertex_index(torus.wrap(x.i + a, x.j + b))] += law[v] * kernel;
  }
  return smoothed;
}

AssemblyDemands assembly_demands(const IsotropicMixture &mix, int n, int m, int l_n,
                                 bool reweight) {
  const Eigen::VectorXd law = assembly_endpoint_law(mix, n, m, l_n);
  const Torus torus(n);
  const SkeletonLayout layout(n, m);
  const int nb = 4 * m, cells = m * m, h = (l_n - 1) / 2, window = l_n * l_n;
  const int squares = layout.num_squares(), states = layout.num_states();

  // r(z): rescaling of pairs ending at z; K(z): its mean over the L x L window.
  Eigen::VectorXd r = Eigen::VectorXd::Ones(n * n);
  if (reweight) {
    if (!(law.minCoeff() > 0.0))
      throw std::runtime_error("assemble: endpoint law misses some vertex; raise N or L_N");
    r = (double(n) * n * law).cwiseInverse();
  }
  auto z_of = [&](int square, int c) {
    const auto [si, sj] = layout.square_coords(square);
    return TorusVertex{si * m + c % m, sj * m + c / m};
  };
  auto shifted = [&](TorusVertex z, int u) {
    return torus.vertex_index(torus.wrap(z.i + u % l_n - h, z.j + u / l_n - h));
  };
  Eigen::MatrixXd k_window(squares, cells); // K at (square, cell)
  Eigen::VectorXd h_square(squares);        // mean of K over the square
  for (int sq = 0; sq < squares; ++sq) {
    for (int c = 0; c < cells; ++c) {
      double acc = 0.0;
      for (int u = 0; u < window; ++u)
        acc += r[shifted(z_of(sq, c), u)];
      k_window(sq, c) = acc / window;
    }
    h_square[sq] = k_window.row(sq).mean();
  }
  std::vector<int> exit_of(squares * nb);
  for (int sq = 0; sq < squares; ++sq)
    for (int b = 0; b < nb; ++b)
      exit_of[sq * nb + b] = layout.exit_state(sq, boundary_point(b, m));

  AssemblyDemands d;
  d.law = law;
  d.rho1 = Eigen::VectorXd::Zero(nb);
  d.cross = Eigen::MatrixXd::Zero(nb, nb);
  d.d3 = Eigen::MatrixXd::Zero(nb, cells);
  d.d4 = Eigen::MatrixXd::Zero(cells, window);
  Eigen::VectorXd term(states);
  for (int s = 0; s < states; ++s)
    term[s] = h_square[layout.state_square(s)];

  for (const auto &comp : mix.components) {
    const SkeletonChain c = build_chain(comp.q, n, m);
    const double scale = comp.weight * cells / double(n);
    const Eigen::VectorXd exi = comp.q.exit();
    const double cw = c.ceil_weight;

    std::vector<Eigen::RowVectorXd> alpha(c.t_floor + 1);
    alpha[0] = Eigen::RowVectorXd::Zero(states);
    for (int b = 0; b < nb; ++b)
      alpha[0][exit_of[b]] += exi[b] / c.mass;
    for (int j = 0; j < c.t_floor; ++j)
      alpha[j + 1] = alpha[j] * c.q1;
    const Eigen::RowVectorXd last = alpha[c.t_floor] * c.q1;
    const Eigen::RowVectorXd final_law = (1.0 - cw) * alpha[c.t_floor] + cw * last;

    // beta[j](s): expected rescaling of a walk in state s after j steps.
    std::vector<Eigen::VectorXd> beta(c.t_floor + 1);
    beta[c.t_floor] = (1.0 - cw) * term + cw * (c.q1 * term);
    for (int j = c.t_floor - 1; j >= 0; --j)
      beta[j] = c.q1 * beta[j + 1];

    for (int b = 0; b < nb; ++b)
      d.rho1[b] += scale * exi[b] / c.mass * beta[0][exit_of[b]];

    auto add_cross = [&](const Eigen::RowVectorXd &a, const Eigen::VectorXd &next, double w) {
      for (int s = 0; s < states; ++s) {
        if (a[s] == 0.0)
          continue;
        const int sq = layout.state_square(s), e = s % nb;
        for (int b1 = 0; b1 < nb; ++b1)
          if (const double qb = c.qbar(e, b1); qb > 0.0)
            d.cross(e, b1) += w * a[s] * qb * next[exit_of[sq * nb + b1]];
      }
    };
    for (int j = 0; j < c.t_floor; ++j)
      add_cross(alpha[j], beta[j + 1], scale);
    if (cw > 0.0)
      add_cross(alpha[c.t_floor], term, scale * cw);

    for (int s = 0; s < states; ++s) {
      if (final_law[s] == 0.0)
        continue;
      const int sq = layout.state_square(s), e = s % nb;
      const double p = scale * final_law[s] / cells;
      for (int cell = 0; cell < cells; ++cell) {
        d.d3(e, cell) += p * k_window(sq, cell);
        const TorusVertex z = z_of(sq, cell);
        for (int u = 0; u < window; ++u)
          d.d4(cell, u) += p * r[shifted(z, u)] / window;
      }
    }
  }
  return d;
}

AssemblyResult assemble_global(int n, int m, const Environment &env, const IsotropicMixture &mix,
                               int l_n, const SolverConfig &cfg) {
  validate_mixture(mix, n, m);
  if (env.kind() != EnvironmentKind::Torus || env.size() != n)
    throw std::invalid_argument("assemble_global: environment is not an N x N torus");
  const Torus torus(n);
  const ExtendedSquare sq(m);
  const SkeletonLayout layout(n, m);
  const auto place = edge_placements(sq);
  const int ne = torus.num_edges();
  const int squares = layout.num_squares();

  AssemblyResult res;
  res.l_n = l_n;

  const AssemblyDemands dem = assembly_demands(mix, n, m, l_n);
  res.w_n = double(n) * n * dem.law.minCoeff();

  // Steps 1 and 3: one-turn paths between boundary points and cells.
  const FlowVolume vol1 = flo(router_lemma8<double>(sq, dem.rho1), sq.num_edges());
  FlowVolume vol3 = FlowVolume::Zero(sq.num_edges());
  for (int e = 0; e < 4 * m; ++e)
    for (int cell = 0; cell < m * m; ++cell)
      if (const double w = dem.d3(e, cell); w > 0.0) {
        const LatticePath p = make_path(
            sq.graph(), detail::one_turn(sq, boundary_point(e, m), cell % m, cell / m));
        for (int edge : p.edges)
          vol3[edge] += w;
      }
  res.step1 = res.step3 = FlowVolume::Zero(ne);
  for (int s = 0; s < squares; ++s) {
    const auto [si, sj] = layout.square_coords(s);
    add_square_volume(res.step1, vol1, torus, place, si, sj, m);
    add_square_volume(res.step3, vol3, torus, place, si, sj, m);
  }

  // Step 2: optimal local flows for the crossing transport, one solve per
  // distinct local environment.
  TransportMeasure cross(m);
  cross.mass = dem.cross;
  SolverConfig local_cfg = cfg;
  if (!local_cap_admissible(cross, cfg.cap)) {
    local_cfg.cap = 1e300;
    res.local_relaxed = squares;
  }
  std::vector<Environment> local_envs;
  std::vector<int> solve_of(squares);
  {
    std::map<std::uint64_t, std::vector<int>> by_hash;
    for (int s = 0; s < squares; ++s) {
      const auto [si, sj] = layout.square_coords(s);
      Environment local = restrict_env(env, si, sj, n, m);
      auto &bucket = by_hash[environment_hash(local)];
      int found = -1;
      for (int u : bucket)
        if (local_envs[u].cost() == local.cost())
          found = u;
      if (found < 0) {
        found = static_cast<int>(local_envs.size());
        bucket.push_back(found);
        local_envs.push_back(std::move(local));
      }
      solve_of[s] = found;
    }
  }
  std::vector<SolveResult> local(local_envs.size());
#pragma omp parallel for schedule(dynamic)
  for (int u = 0; u < static_cast<int>(local_envs.size()); ++u)
    local[u] = solve_local(m, local_envs[u], cross, local_cfg);
  for (const auto &r : local)
    if (r.infeasible)
      throw std::runtime_error("assemble_global: local problem infeasible at the cap");

  res.step2 = FlowVolume::Zero(ne);
  FlowVolume inner_half = FlowVolume::Zero(ne), outer_half = FlowVolume::Zero(ne);
  std::vector<char> boundary(ne, 0);
  for (int s = 0; s < squares; ++s) {
    const auto [si, sj] = layout.square_coords(s);
    const SolveResult &r = local[solve_of[s]];
    add_square_volume(res.step2, r.flow, torus, place, si, sj, m);
    for (int e = 0; e < sq.num_edges(); ++e) {
      if (!place[e].half)
        continue;
      const int te = torus_edge(torus, place[e], si, sj, m);
      boundary[te] = 1;
      (place[e].outer ? outer_half : inner_half)[te] += r.flow[e];
    }
    res.local_total += r.objective;
    if (!r.converged)
      ++res.local_failures;
  }
  for (int e = 0; e < ne; ++e)
    if (boundary[e])
      res.half_edge_mismatch =
          std::max(res.half_edge_mismatch, std::abs(inner_half[e] - outer_half[e]));
  res.local_mean = res.local_total / squares;
  res.target = double(n / m) * double(n / m) * res.local_mean;

  // Step 4: from each cell to its offset in the L x L window.
  res.step4 = FlowVolume::Zero(ne);
  const int h = (l_n - 1) / 2;
  for (int s = 0; s < squares; ++s) {
    const auto [si, sj] = layout.square_coords(s);
    for (int cell = 0; cell < m * m; ++cell)
      for (int u = 0; u < l_n * l_n; ++u)
        if (const double w = dem.d4(cell, u); w > 0.0)
          add_l_path(res.step4, torus, si * m + cell % m, sj * m + cell / m, u % l_n - h,
                     u / l_n - h, w);
  }

  FlowVolume f = res.step1 + res.step2 + res.step3 + res.step4;
  res.max_before_repair = f.maxCoeff();

  const double uni = uniform_flow_value(n);
  if (res.max_before_repair > cfg.cap) {
    if (!(uni < cfg.cap))
      throw std::runtime_error("assemble_global: cap does not exceed the uniform flow value");
    res.repair_lambda = (res.max_before_repair - cfg.cap) / (res.max_before_repair - uni);
    f = (1.0 - res.repair_lambda) * f + FlowVolume::Constant(ne, res.repair_lambda * uni);
  }
  res.flow = std::move(f);
  res.cost = cost(res.flow, env);
  res.feasible = res.flow.maxCoeff() <= cfg.cap * (1.0 + 1e-12);
  return res;
}

} // namespace latflow
