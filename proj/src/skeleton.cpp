#include "latflow/construction.hpp"
#include "latflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace latflow {
namespace {

std::vector<double> cumsum(const Eigen::Ref<const Eigen::VectorXd> &w) {
  std::vector<double> c(w.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    c[k] = acc += w[k];
  return c;
}

int draw(const std::vector<double> &cumulative, double u) {
  const double x = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  int k = static_cast<int>(it - cumulative.begin());
  if (k < static_cast<int>(cumulative.size()))
    return k;
  k = static_cast<int>(cumulative.size()) - 1;
  while (k > 0 && cumulative[k] == cumulative[k - 1])
    --k;
  return k;
}

std::vector<int> state_points(const SkeletonLayout &layout) {
  std::vector<int> pts(layout.num_states());
  for (int s = 0; s < layout.num_states(); ++s)
    pts[s] = layout.state(s).point;
  return pts;
}

// Law after `steps` and after `steps + 1` transitions, mixed by ceil_weight,
// for every row of `start`.
Eigen::MatrixXd propagate_mixed(const SkeletonChain &c, Eigen::MatrixXd rows) {
  for (int i = 0; i < c.t_floor; ++i)
    rows = rows * c.q1;
  if (c.ceil_weight > 0.0) {
    Eigen::MatrixXd next = rows * c.q1;
    rows = (1.0 - c.ceil_weight) * rows + c.ceil_weight * next;
  }
  return rows;
}

// Accumulates displacement mass into grid x grid bins.
class DisplacementBins {
public:
  DisplacementBins(const SkeletonLayout &layout, int grid)
      : layout_(layout), grid_(grid), bins_(Eigen::MatrixXd::Zero(grid, grid)) {}

  void add(int p0, int p1, double w) {
    if (w == 0.0)
      return;
    const double n = layout_.n();
    const Eigen::Vector2d d = layout_.point_position(p1) - layout_.point_position(p0);
    int idx[2];
    for (int a = 0; a < 2; ++a) {
      double x = std::fmod(d[a], n);
      if (x < 0.0)
        x += n;
      idx[a] = std::min(grid_ - 1, static_cast<int>(std::floor(x / n * grid_)));
    }
    bins_(idx[0], idx[1]) += w;
  }

  double tv() const {
    const double total = bins_.sum();
    if (!(total > 0.0))
      return 0.0;
    const double u = 1.0 / (double(grid_) * grid_);
    return 0.5 * (bins_ / total - Eigen::MatrixXd::Constant(grid_, grid_, u)).cwiseAbs().sum();
  }

private:
  const SkeletonLayout &layout_;
  int grid_;
  Eigen::MatrixXd bins_;
};

void check_mixture(const IsotropicMixture &mix, int n, int m) {
  require_divides(m, n);
  if (mix.m != m)
    throw std::invalid_argument("skeleton: mixture square size differs from M");
  if (mix.components.empty())
    throw std::invalid_argument("skeleton: mixture has no components");
  for (const auto &c : mix.components)
    if (!check_irreducible(projection(c.q)))
      throw std::invalid_argument("skeleton: mixture component is not irreducible");
}

int resolve_grid(const IsotropicMixture &mix, int requested) {
  if (requested > 0)
    return requested;
  return std::max(1, mix.grid);
}

} // namespace

double skeleton_exact_cost(const IsotropicMixture &mix, int n, int m) {
  const double states = 4.0 * n * n / m;
  double ops = 0.0;
  for (const auto &c : mix.components) {
    const double t = n * c.q.total() / (double(m) * m);
    ops += states * states * 4.0 * m * (std::floor(t) + 2.0);
  }
  return ops;
}

double endpoint_tv(const IsotropicMixture &mix, int n, int m, int grid) {
  check_mixture(mix, n, m);
  const SkeletonLayout layout(n, m);
  const auto pts = state_points(layout);
  DisplacementBins bins(layout, resolve_grid(mix, grid));
  for (const auto &comp : mix.components) {
    const SkeletonChain c = build_chain(comp.q, n, m);
    // Start states of square 0 are indices 0 .. 4M-1.
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(4 * m, layout.num_states());
    for (int s = 0; s < 4 * m; ++s)
      rows(s, s) = 1.0;
    rows = propagate_mixed(c, std::move(rows));
    for (int s = 0; s < 4 * m; ++s)
      for (int s1 = 0; s1 < layout.num_states(); ++s1)
        bins.add(pts[s], pts[s1], comp.weight * c.pi[s] * rows(s, s1));
  }
  return bins.tv();
}

SkeletonMeasure skeleton_measure(const IsotropicMixture &mix, int n, int m,
                                 const SkeletonOptions &opt) {
  check_mixture(mix, n, m);
  const SkeletonLayout layout(n, m);
  const int ns = layout.num_states();
  const int np = layout.num_points();
  const int nsq = layout.num_squares();
  const int nb = 4 * m;
  const auto pts = state_points(layout);

  SkeletonMeasure out;
  out.n = n;
  out.m = m;
  out.mode = opt.mode;
  out.theta = Eigen::MatrixXd::Zero(np, np);
  out.nu_s.assign(nsq, Eigen::MatrixXd::Zero(nb, nb));
  out.tv_grid = resolve_grid(mix, opt.tv_grid);

  std::vector<SkeletonChain> chains;
  for (const auto &comp : mix.components)
    chains.push_back(build_chain(comp.q, n, m));

  if (opt.mode == SkeletonMode::Exact) {
    if (skeleton_exact_cost(mix, n, m) > opt.budget)
      throw std::runtime_error("skeleton_measure: exact mode exceeds the operation budget");
    for (std::size_t k = 0; k < chains.size(); ++k) {
      const SkeletonChain &c = chains[k];
      const double w = mix.components[k].weight * n;
      // Expected visits of each state over the floor/ceil step mixture.
      Eigen::VectorXd v = c.pi, occ = Eigen::VectorXd::Zero(ns);
      for (int i = 0; i < c.t_floor; ++i) {
        occ += v;
        v = (v.transpose() * c.q1).transpose();
      }
      occ += c.ceil_weight * v;
      for (int s = 0; s < ns; ++s)
        if (occ[s] != 0.0)
          out.nu_s[layout.state_square(s)].row(s % nb) += w * occ[s] * c.qbar.row(s % nb);

      std::vector<int> support;
      for (int s = 0; s < ns; ++s)
        if (c.pi[s] > 0.0)
          support.push_back(s);
      Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(support.size(), ns);
      for (std::size_t r = 0; r < support.size(); ++r)
        rows(r, support[r]) = 1.0;
      rows = propagate_mixed(c, std::move(rows));
      for (std::size_t r = 0; r < support.size(); ++r) {
        const double base = w * c.pi[support[r]];
        for (int s1 = 0; s1 < ns; ++s1)
          if (rows(r, s1) != 0.0)
            out.theta(pts[support[r]], pts[s1]) += base * rows(r, s1);
      }
    }
  } else {
    if (opt.samples < 2)
      throw std::invalid_argument("skeleton_measure: Monte Carlo needs at least two samples");
    std::vector<double> comp_cum;
    {
      Eigen::VectorXd cw(mix.components.size());
      for (std::size_t k = 0; k < mix.components.size(); ++k)
        cw[k] = mix.components[k].weight;
      comp_cum = cumsum(cw);
    }
    std::vector<std::vector<double>> pi_cum;
    std::vector<std::vector<std::vector<double>>> row_cum;
    for (const auto &c : chains) {
      pi_cum.push_back(cumsum(c.pi));
      row_cum.emplace_back(nb);
      for (int b = 0; b < nb; ++b)
        row_cum.back()[b] = cumsum(c.qbar.row(b).transpose());
    }

    const long samples = opt.samples;
    constexpr long kChunk = 256;
    const long chunks = (samples + kChunk - 1) / kChunk;
    const int cells = nsq * nb * nb;
    std::vector<std::pair<int, int>> endpoints(samples);
    // Visit counts are integers, so the merged sums do not depend on order.
    Eigen::VectorXd visits = Eigen::VectorXd::Zero(cells), visits2 = Eigen::VectorXd::Zero(cells);

#pragma omp parallel
    {
      Eigen::VectorXd local = Eigen::VectorXd::Zero(cells), local2 = Eigen::VectorXd::Zero(cells);
      std::vector<int> touched;
#pragma omp for schedule(static)
      for (long ch = 0; ch < chunks; ++ch) {
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(ch)));
        const long end = std::min(samples, (ch + 1) * kChunk);
        for (long smp = ch * kChunk; smp < end; ++smp) {
          const int k = draw(comp_cum, rng.uniform());
          const SkeletonChain &c = chains[k];
          const int steps = c.t_floor + (rng.uniform() < c.ceil_weight ? 1 : 0);
          int s = draw(pi_cum[k], rng.uniform());
          const int p0 = pts[s];
          touched.clear();
          for (int i = 0; i < steps; ++i) {
            const int b0 = s % nb, sq = layout.state_square(s);
            const int b1 = draw(row_cum[k][b0], rng.uniform());
            touched.push_back((sq * nb + b0) * nb + b1);
            s = layout.exit_state(sq, boundary_point(b1, m));
          }
          endpoints[smp] = {p0, pts[s]};
          std::sort(touched.begin(), touched.end());
          for (std::size_t a = 0; a < touched.size();) {
            std::size_t b = a;
            while (b < touched.size() && touched[b] == touched[a])
              ++b;
            const double cnt = double(b - a);
            local[touched[a]] += cnt;
            local2[touched[a]] += cnt * cnt;
            a = b;
          }
        }
      }
#pragma omp critical
      {
        visits += local;
        visits2 += local2;
      }
    }

    const double scale = double(n) / samples;
    for (const auto &[p0, p1] : endpoints)
      out.theta(p0, p1) += scale;
    out.nu_s_stderr.assign(nsq, Eigen::MatrixXd::Zero(nb, nb));
    for (int sq = 0; sq < nsq; ++sq) {
      for (int b0 = 0; b0 < nb; ++b0) {
        for (int b1 = 0; b1 < nb; ++b1) {
          const int cell = (sq * nb + b0) * nb + b1;
          const double mean = visits[cell] / samples;
          const double var =
              std::max(0.0, (visits2[cell] - samples * mean * mean) / (samples - 1));
          out.nu_s[sq](b0, b1) = n * mean;
          out.nu_s_stderr[sq](b0, b1) = n * std::sqrt(var / samples);
        }
      }
    }
    out.samples = samples;
  }

  DisplacementBins bins(layout, out.tv_grid);
  for (int p0 = 0; p0 < np; ++p0)
    for (int p1 = 0; p1 < np; ++p1)
      bins.add(p0, p1, out.theta(p0, p1));
  out.tv_uniform = bins.tv();
  return out;
}

Properties3Report properties3(const SkeletonMeasure &s) {
  const SkeletonLayout layout(s.n, s.m);
  const int np = layout.num_points();
  Properties3Report r;
  r.total_mass = s.theta.sum();
  std::vector<int> tx(np), ty(np);
  for (int p = 0; p < np; ++p) {
    tx[p] = layout.translate_point(p, 1, 0);
    ty[p] = layout.translate_point(p, 0, 1);
  }
  for (int p0 = 0; p0 < np; ++p0) {
    for (int p1 = 0; p1 < np; ++p1) {
      const double v = s.theta(p0, p1);
      r.translation_x = std::max(r.translation_x, std::abs(s.theta(tx[p0], tx[p1]) - v));
      r.translation_y = std::max(r.translation_y, std::abs(s.theta(ty[p0], ty[p1]) - v));
    }
  }
  r.marginal_defect =
      (s.theta.rowwise().sum() - s.theta.colwise().sum().transpose()).lpNorm<Eigen::Infinity>();
  return r;
}

double nu_s_defect(const SkeletonMeasure &s, const TransportMeasure &q0) {
  double d = 0.0;
  for (const auto &nu : s.nu_s)
    d = std::max(d, (nu - q0.mass).lpNorm<Eigen::Infinity>());
  return d;
}

} // namespace latflow
