#include "latflow/routers.hpp"
#include "latflow/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace latflow {

std::string to_string(CapacityMode m) {
  return m == CapacityMode::Penalty ? "penalty" : "ignore-if-slack";
}

std::string to_string(FwVariant v) {
  switch (v) {
  case FwVariant::Plain:
    return "plain";
  case FwVariant::Away:
    return "away";
  case FwVariant::Pairwise:
    return "pairwise";
  }
  return {};
}

CapacityMode parse_capacity_mode(const std::string &s) {
  if (s == "penalty")
    return CapacityMode::Penalty;
  if (s == "ignore-if-slack")
    return CapacityMode::IgnoreIfSlack;
  throw std::invalid_argument("unknown capacity mode '" + s + "'");
}

FwVariant parse_fw_variant(const std::string &s) {
  if (s == "plain")
    return FwVariant::Plain;
  if (s == "away")
    return FwVariant::Away;
  if (s == "pairwise")
    return FwVariant::Pairwise;
  throw std::invalid_argument("unknown Frank-Wolfe variant '" + s + "'");
}

double FlowProblem::total_demand(int k) const {
  const Commodity &c = commodities[k];
  if (c.demands.empty())
    return c.uniform_demand * graph->num_vertices();
  double t = 0.0;
  for (const auto &d : c.demands)
    t += d.second;
  return t;
}

double SparseVolume::dot(const Eigen::VectorXd &w) const {
  double s = 0.0;
  for (std::size_t i = 0; i < edge.size(); ++i)
    s += w[edge[i]] * value[i];
  return s;
}

SparseVolume sparse_volume(const FlowVolume &v) {
  SparseVolume s;
  for (Eigen::Index e = 0; e < v.size(); ++e)
    if (v[e] != 0.0) {
      s.edge.push_back(static_cast<int>(e));
      s.value.push_back(v[e]);
    }
  return s;
}

FlowVolume Decomposition::commodity_flow(int k) const {
  FlowVolume f = FlowVolume::Zero(num_edges);
  for (const Atom &a : blocks[k])
    for (std::size_t i = 0; i < a.volume.edge.size(); ++i)
      f[a.volume.edge[i]] += a.alpha * a.volume.value[i];
  return f;
}

FlowVolume Decomposition::flow() const {
  FlowVolume f = FlowVolume::Zero(num_edges);
  for (const auto &block : blocks)
    for (const Atom &a : block)
      for (std::size_t i = 0; i < a.volume.edge.size(); ++i)
        f[a.volume.edge[i]] += a.alpha * a.volume.value[i];
  return f;
}

std::size_t Decomposition::atom_count() const {
  std::size_t n = 0;
  for (const auto &block : blocks)
    n += block.size();
  return n;
}

ShortestPathTree shortest_path_tree(const Graph &g, const Eigen::VectorXd &w, int source) {
  const int n = g.num_vertices();
  ShortestPathTree t;
  t.dist.assign(n, std::numeric_limits<double>::infinity());
  t.parent_edge.assign(n, -1);
  t.order.reserve(n);
  std::vector<char> done(n, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  t.dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (done[v])
      continue;
    done[v] = 1;
    t.order.push_back(v);
    for (const auto &arc : g.arcs(v)) {
      if (done[arc.to])
        continue;
      const double nd = d + w[arc.edge];
      if (nd < t.dist[arc.to] || (nd == t.dist[arc.to] && arc.edge < t.parent_edge[arc.to])) {
        t.dist[arc.to] = nd;
        t.parent_edge[arc.to] = arc.edge;
        heap.push({nd, arc.to});
      }
    }
  }
  return t;
}

namespace {

using Clock = std::chrono::steady_clock;

int other_end(const Graph &g, int edge, int v) {
  const auto [a, b] = g.endpoints(edge);
  return a == v ? b : a;
}

// Demand placed on every vertex by commodity k.
void fill_load(const FlowProblem &p, int k, std::vector<double> &load) {
  const Commodity &c = p.commodities[k];
  if (c.demands.empty()) {
    load.assign(p.graph->num_vertices(), c.uniform_demand);
    return;
  }
  load.assign(p.graph->num_vertices(), 0.0);
  for (const auto &[t, d] : c.demands)
    load[t] += d;
}

void check_reachable(const ShortestPathTree &t, const std::vector<double> &load) {
  for (std::size_t v = 0; v < load.size(); ++v)
    if (load[v] > 0.0 && !std::isfinite(t.dist[v]))
      throw std::runtime_error("commodity has an unreachable destination");
}

// Adds the assignment of commodity k along tree t into y.
void accumulate(const FlowProblem &p, int k, const ShortestPathTree &t, FlowVolume &y,
                std::vector<double> &load) {
  fill_load(p, k, load);
  check_reachable(t, load);
  for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
    const int v = *it;
    const int e = t.parent_edge[v];
    if (e < 0 || load[v] == 0.0)
      continue;
    y[e] += load[v];
    load[other_end(*p.graph, e, v)] += load[v];
  }
}

// Commodity k routed on the shortest-path tree for w.
SparseVolume tree_volume(const FlowProblem &p, int k, const Eigen::VectorXd &w) {
  const ShortestPathTree t = shortest_path_tree(*p.graph, w, p.commodities[k].source);
  std::vector<double> load;
  fill_load(p, k, load);
  check_reachable(t, load);
  std::vector<std::pair<int, double>> parts;
  for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
    const int v = *it;
    const int e = t.parent_edge[v];
    if (e < 0 || load[v] == 0.0)
      continue;
    parts.push_back({e, load[v]});
    load[other_end(*p.graph, e, v)] += load[v];
  }
  std::sort(parts.begin(), parts.end());
  SparseVolume s;
  s.edge.reserve(parts.size());
  s.value.reserve(parts.size());
  for (const auto &[e, x] : parts) {
    s.edge.push_back(e);
    s.value.push_back(x);
  }
  return s;
}

// Cheapest routing cost of commodity k under w.
double min_routing(const FlowProblem &p, int k, const Eigen::VectorXd &w) {
  const ShortestPathTree t = shortest_path_tree(*p.graph, w, p.commodities[k].source);
  std::vector<double> load;
  fill_load(p, k, load);
  check_reachable(t, load);
  double total = 0.0;
  for (std::size_t v = 0; v < load.size(); ++v)
    if (load[v] > 0.0)
      total += load[v] * t.dist[v];
  return total;
}

// Augmented Lagrangian term for f <= cap with multipliers mu and weight
// omega: (max(0, mu + 2 omega (f - cap))^2 - mu^2) / (4 omega). With mu = 0
// this is the quadratic penalty omega (f - cap)+^2.
struct Penalty {
  double cap = 0.0;
  double omega = 0.0;
  Eigen::VectorXd mu; // empty means zero

  double m(Eigen::Index e) const { return mu.size() ? mu[e] : 0.0; }
  bool active() const { return omega > 0.0; }
  // Multiplier estimate at volume x, also the derivative of the term.
  double slope(Eigen::Index e, double x) const {
    return active() ? std::max(0.0, m(e) + 2.0 * omega * (x - cap)) : 0.0;
  }
  double value(Eigen::Index e, double x) const {
    if (!active())
      return 0.0;
    const double s = slope(e, x), me = m(e);
    return (s * s - me * me) / (4.0 * omega);
  }
};

double penalized_objective(const Eigen::VectorXd &c, const FlowVolume &f, const Penalty &pen) {
  double s = 0.0;
  for (Eigen::Index e = 0; e < f.size(); ++e)
    s += c[e] * f[e] * f[e] + pen.value(e, f[e]);
  return s;
}

Eigen::VectorXd gradient(const Eigen::VectorXd &c, const FlowVolume &f, const Penalty &pen) {
  Eigen::VectorXd g = 2.0 * c.cwiseProduct(f);
  if (pen.active())
    for (Eigen::Index e = 0; e < f.size(); ++e)
      g[e] += pen.slope(e, f[e]);
  return g;
}

// Lagrangian value at f for the multipliers pen.slope(f). Its gradient at f
// equals gradient(c, f, pen), so subtracting the FW gap gives a lower bound
// on the capacitated optimum.
double lagrangian(const Eigen::VectorXd &c, const FlowVolume &f, const Penalty &pen) {
  double s = 0.0;
  for (Eigen::Index e = 0; e < f.size(); ++e)
    s += c[e] * f[e] * f[e] + pen.slope(e, f[e]) * (f[e] - pen.cap);
  return s;
}

// Sparse combination of atom volumes, merged by edge.
class Direction {
public:
  explicit Direction(int edges) : pos_(edges, -1) {}

  void clear() {
    for (int e : edge)
      pos_[e] = -1;
    edge.clear();
    value.clear();
  }
  void add(const SparseVolume &v, double coeff) {
    for (std::size_t i = 0; i < v.edge.size(); ++i) {
      const int e = v.edge[i];
      if (pos_[e] < 0) {
        pos_[e] = static_cast<int>(edge.size());
        edge.push_back(e);
        value.push_back(0.0);
      }
      value[pos_[e]] += coeff * v.value[i];
    }
  }

  std::vector<int> edge;
  std::vector<double> value;

private:
  std::vector<int> pos_;
};

// Minimizer over [0, gmax] of the penalized objective along f + gamma d.
double line_search(const Eigen::VectorXd &c, const FlowVolume &f, const Direction &d,
                   const Penalty &pen, double gmax) {
  auto slope = [&](double g) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.edge.size(); ++i) {
      const int e = d.edge[i];
      const double x = f[e] + g * d.value[i];
      s += (2.0 * c[e] * x + pen.slope(e, x)) * d.value[i];
    }
    return s;
  };
  if (slope(0.0) >= 0.0)
    return 0.0;
  if (slope(gmax) <= 0.0)
    return gmax;
  if (!pen.active()) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d.edge.size(); ++i) {
      const int e = d.edge[i];
      num -= c[e] * f[e] * d.value[i];
      den += c[e] * d.value[i] * d.value[i];
    }
    return std::clamp(num / den, 0.0, gmax);
  }
  // The slope is piecewise linear and nondecreasing.
  double lo = 0.0, hi = gmax;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Repair {
  FlowVolume flow;
  double lambda = 0.0;
  bool ok = true;
};

Repair repair(const FlowProblem &p, const FlowVolume &f, double cap) {
  Repair r{f, 0.0, true};
  const double top = f.size() ? f.maxCoeff() : 0.0;
  if (top <= cap)
    return r;
  if (p.repair_reference < 0) {
    r.ok = false;
    return r;
  }
  const FlowVolume &ref = p.fixed[p.repair_reference].volume;
  const double ref_top = ref.size() ? ref.maxCoeff() : 0.0;
  if (ref_top >= cap) {
    r.ok = false;
    return r;
  }
  r.lambda = (top - cap) / (top - ref_top);
  r.flow = (1.0 - r.lambda) * f + r.lambda * ref;
  // Guard against the last ulp of rounding.
  for (int k = 0; k < 8 && r.flow.maxCoeff() > cap; ++k) {
    r.lambda = std::min(1.0, r.lambda + 4 * std::numeric_limits<double>::epsilon());
    r.flow = (1.0 - r.lambda) * f + r.lambda * ref;
  }
  return r;
}

void fold_repair(Decomposition &d, const FlowProblem &p, double lambda) {
  if (lambda <= 0.0)
    return;
  const int ref = p.repair_reference;
  for (std::size_t k = 0; k < d.blocks.size(); ++k) {
    auto &block = d.blocks[k];
    for (Atom &a : block)
      a.alpha *= 1.0 - lambda;
    auto it = std::find_if(block.begin(), block.end(), [&](const Atom &a) { return a.fixed == ref; });
    if (it == block.end()) {
      block.push_back(
          {sparse_volume(p.fixed[ref].commodity_volume(static_cast<int>(k))), ref, 0.0});
      it = block.end() - 1;
    }
    it->alpha += lambda;
  }
}

// Block-coordinate steps; keeps f and its gradient g in sync with the atoms.
class BlockStepper {
public:
  BlockStepper(const Eigen::VectorXd &c, const Penalty &pen, FwVariant variant, FlowVolume &f,
               Eigen::VectorXd &g)
      : c_(c), pen_(pen), variant_(variant), f_(f), g_(g), d_(static_cast<int>(c.size())) {}

  // Moves block toward atom s; drops atoms whose weight reaches zero.
  void step(std::vector<Atom> &block, int s) {
    const int n = static_cast<int>(block.size());
    std::vector<double> score(n);
    int away = -1;
    for (int j = 0; j < n; ++j) {
      score[j] = block[j].volume.dot(g_);
      if (block[j].alpha > 0.0 && (away < 0 || score[j] > score[away]))
        away = j;
    }
    if (away < 0)
      return;
    double mean = 0.0;
    for (int j = 0; j < n; ++j)
      mean += block[j].alpha * score[j];
    d_.clear();
    bool fw = variant_ == FwVariant::Plain;
    if (variant_ == FwVariant::Away)
      fw = away == s || block[away].alpha >= 1.0 - 1e-15 ||
           score[s] - mean <= mean - score[away];
    if (fw) {
      if (score[s] >= mean)
        return;
      d_.add(block[s].volume, 1.0);
      for (const Atom &a : block)
        if (a.alpha != 0.0)
          d_.add(a.volume, -a.alpha);
      const double gamma = line_search(c_, f_, d_, pen_, 1.0);
      if (gamma <= 0.0)
        return;
      for (Atom &a : block)
        a.alpha *= 1.0 - gamma;
      block[s].alpha += gamma;
      apply(gamma);
    } else if (variant_ == FwVariant::Pairwise) {
      if (away == s || score[s] >= score[away])
        return;
      d_.add(block[s].volume, 1.0);
      d_.add(block[away].volume, -1.0);
      const double gmax = block[away].alpha;
      const double gamma = line_search(c_, f_, d_, pen_, gmax);
      if (gamma <= 0.0)
        return;
      block[away].alpha = gamma >= gmax ? 0.0 : block[away].alpha - gamma;
      block[s].alpha += gamma;
      apply(gamma);
    } else {
      if (score[away] <= mean)
        return;
      for (const Atom &a : block)
        if (a.alpha != 0.0)
          d_.add(a.volume, a.alpha);
      d_.add(block[away].volume, -1.0);
      const double ga = block[away].alpha;
      const double gmax = ga / (1.0 - ga);
      const double gamma = line_search(c_, f_, d_, pen_, gmax);
      if (gamma <= 0.0)
        return;
      for (Atom &a : block)
        a.alpha *= 1.0 + gamma;
      block[away].alpha = gamma >= gmax ? 0.0 : block[away].alpha - gamma;
      apply(gamma);
    }
    std::erase_if(block, [](const Atom &a) { return a.alpha <= 1e-16; });
  }

private:
  void apply(double gamma) {
    for (std::size_t i = 0; i < d_.edge.size(); ++i) {
      const int e = d_.edge[i];
      f_[e] += gamma * d_.value[i];
      g_[e] = 2.0 * c_[e] * f_[e] + pen_.slope(e, f_[e]);
    }
  }

  const Eigen::VectorXd &c_;
  const Penalty &pen_;
  FwVariant variant_;
  FlowVolume &f_;
  Eigen::VectorXd &g_;
  Direction d_;
};

int add_tree(std::vector<Atom> &block, SparseVolume v) {
  for (std::size_t j = 0; j < block.size(); ++j)
    if (block[j].fixed < 0 && block[j].volume == v)
      return static_cast<int>(j);
  block.push_back({std::move(v), -1, 0.0});
  return static_cast<int>(block.size()) - 1;
}

} // namespace

Eigen::VectorXd marginal_weights(const Eigen::VectorXd &cost, const FlowVolume &f, double cap,
                                 double penalty, double floor) {
  return gradient(cost, f, Penalty{cap, penalty, {}}).cwiseMax(floor);
}

FlowVolume all_or_nothing(const FlowProblem &p, const Eigen::VectorXd &w) {
  const int e = static_cast<int>(p.cost.size());
  const int count = static_cast<int>(p.commodities.size());
  // Fixed blocks keep the summation order independent of the thread count.
  constexpr int kBlock = 16;
  const int blocks = (count + kBlock - 1) / kBlock;
  std::vector<FlowVolume> partial(blocks, FlowVolume::Zero(e));
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < blocks; ++b) {
    std::vector<double> load;
    for (int k = b * kBlock; k < std::min(count, (b + 1) * kBlock); ++k) {
      const auto t = shortest_path_tree(*p.graph, w, p.commodities[k].source);
      accumulate(p, k, t, partial[b], load);
    }
  }
  FlowVolume y = FlowVolume::Zero(e);
  for (const auto &part : partial)
    y += part;
  return y;
}

std::vector<FlowVolume> per_commodity_volumes(const FlowProblem &p, const Decomposition &d) {
  std::vector<FlowVolume> out;
  out.reserve(p.commodities.size());
  for (std::size_t k = 0; k < p.commodities.size(); ++k)
    out.push_back(d.commodity_flow(static_cast<int>(k)));
  return out;
}

double waldrop_residual(const FlowProblem &p, const std::vector<FlowVolume> &per_commodity,
                        const Eigen::VectorXd &w) {
  double worst = 0.0;
  for (std::size_t k = 0; k < p.commodities.size(); ++k) {
    const double demand = p.total_demand(static_cast<int>(k));
    if (demand <= 0.0)
      continue;
    const double used = w.dot(per_commodity[k]);
    worst = std::max(worst, (used - min_routing(p, static_cast<int>(k), w)) / demand);
  }
  return worst;
}

double waldrop_residual(const FlowProblem &p, const Decomposition &d, const Eigen::VectorXd &w) {
  const int count = static_cast<int>(p.commodities.size());
  std::vector<double> residual(count, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    const double demand = p.total_demand(k);
    if (demand <= 0.0)
      continue;
    double used = 0.0;
    for (const Atom &a : d.blocks[k])
      used += a.alpha * a.volume.dot(w);
    residual[k] = (used - min_routing(p, k, w)) / demand;
  }
  double worst = 0.0;
  for (double r : residual)
    worst = std::max(worst, r);
  return worst;
}

SolveResult frank_wolfe(const FlowProblem &p, const SolverConfig &cfg, const SolveOptions &opts) {
  const auto start = Clock::now();
  if (!(cfg.tol > 0.0))
    throw std::invalid_argument("solver tolerance must be positive");
  if (!(cfg.cap > 0.0))
    throw std::invalid_argument("solver cap must be positive");
  const Eigen::VectorXd &c = p.cost;
  const double cap = cfg.cap;
  const int edges = static_cast<int>(c.size());
  const int count = static_cast<int>(p.commodities.size());

  auto dec = std::make_shared<Decomposition>();
  if (opts.warm_start) {
    *dec = *opts.warm_start;
    if (dec->num_edges != edges || static_cast<int>(dec->blocks.size()) != count)
      throw std::invalid_argument("warm start does not match the problem");
  } else {
    dec->num_edges = edges;
    dec->blocks.resize(count);
    const Eigen::VectorXd w0 = c.cwiseMax(cfg.weight_floor);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < count; ++k)
      dec->blocks[k] = {p.start_fixed >= 0
                            ? Atom{sparse_volume(p.fixed[p.start_fixed].commodity_volume(k)),
                                   p.start_fixed, 1.0}
                            : Atom{tree_volume(p, k, w0), -1, 1.0}};
  }

  FlowVolume f = dec->flow();
  const double warm_objective =
      opts.warm_start && f.maxCoeff() <= cap ? cost(f, c) : std::numeric_limits<double>::infinity();

  SolveResult res;
  Penalty pen{cap, cfg.capacity == CapacityMode::Penalty ? cfg.penalty_weight : 0.0, {}};
  double last_violation = std::numeric_limits<double>::infinity();
  int rounds = 0;
  double lower = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd g;
  BlockStepper stepper(c, pen, cfg.variant, f, g);
  std::vector<SparseVolume> trees(count);
  int it = 0;
  for (;; ++it) {
    g = gradient(c, f, pen);
    const Eigen::VectorXd w = g.cwiseMax(cfg.weight_floor);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < count; ++k)
      trees[k] = tree_volume(p, k, w);
    double gy = 0.0, ysum = 0.0;
    for (const auto &t : trees) {
      gy += t.dot(g);
      for (double x : t.value)
        ysum += x;
    }
    const double fw = penalized_objective(c, f, pen);
    // The floor perturbs the linear oracle by at most floor * |y|_1.
    const double fw_gap = std::max(0.0, g.dot(f) - gy) + cfg.weight_floor * ysum;
    lower = std::max(lower, lagrangian(c, f, pen) - fw_gap);
    const Repair rep = repair(p, f, cap);
    const double obj = cost(rep.flow, c);
    res.trace.push_back({it, fw, fw_gap, lower, obj, pen.omega});
    res.fw_gap = fw_gap;

    if (rep.ok && obj - lower <= cfg.tol * std::abs(obj) + 1e-14) {
      res.converged = true;
      break;
    }
    if (it >= cfg.max_iter)
      break;
    if (fw_gap <= 0.1 * cfg.tol * std::max(fw, 1e-300) ||
        (rep.lambda > 0.0 && fw_gap <= 0.5 * (obj - lower))) {
      // Subproblem solved, or the repair dominates the gap: update the
      // multipliers and raise the weight if the violation stalls.
      if (rounds >= cfg.penalty_rounds)
        break;
      const double violation = std::max(0.0, f.maxCoeff() - cap);
      if (!pen.active()) {
        pen.omega = cfg.penalty_weight;
      } else {
        Eigen::VectorXd mu(edges);
        for (Eigen::Index e = 0; e < edges; ++e)
          mu[e] = pen.slope(e, f[e]);
        pen.mu = std::move(mu);
        if (violation > 0.5 * last_violation)
          pen.omega *= cfg.penalty_growth;
      }
      last_violation = violation;
      ++rounds;
      continue;
    }

    for (int k = 0; k < count; ++k) {
      const int s = add_tree(dec->blocks[k], std::move(trees[k]));
      stepper.step(dec->blocks[k], s);
    }
    for (int pass = 0; pass < cfg.inner_passes; ++pass)
      for (auto &block : dec->blocks) {
        if (block.size() < 2)
          continue;
        int best = 0;
        double best_score = block[0].volume.dot(g);
        for (int j = 1; j < static_cast<int>(block.size()); ++j)
          if (const double sc = block[j].volume.dot(g); sc < best_score) {
            best = j;
            best_score = sc;
          }
        stepper.step(block, best);
      }
    if (it % 16 == 15)
      f = dec->flow();
  }

  f = dec->flow();
  const Repair rep = repair(p, f, cap);
  res.pre_repair_violation = std::max(0.0, f.maxCoeff() - cap);
  res.repair_lambda = rep.lambda;
  res.infeasible = !rep.ok;
  if (rep.ok)
    fold_repair(*dec, p, rep.lambda);
  std::shared_ptr<const Decomposition> final_dec = dec;
  res.flow = rep.ok ? dec->flow() : f;
  res.objective = cost(res.flow, c);
  if (warm_objective < res.objective) {
    final_dec = opts.warm_start;
    res.flow = final_dec->flow();
    res.objective = cost(res.flow, c);
    res.repair_lambda = 0.0;
    res.infeasible = false;
  }
  res.decomposition = final_dec;
  res.lower_bound = lower;
  res.gap = std::max(0.0, res.objective - lower);
  res.converged = res.converged && !res.infeasible;
  res.iterations = it;
  res.max_volume = res.flow.size() ? res.flow.maxCoeff() : 0.0;
  res.max_violation = std::max(0.0, res.max_volume - cap);
  if (cfg.compute_residual && !res.infeasible) {
    const Eigen::VectorXd w = gradient(c, res.flow, pen).cwiseMax(cfg.weight_floor);
    res.waldrop_residual = waldrop_residual(p, *final_dec, w);
  }
  res.walltime = std::chrono::duration<double>(Clock::now() - start).count();
  return res;
}

FlowProblem global_problem(const Torus &torus, const Environment &env) {
  const int n = torus.size();
  if (env.kind() != EnvironmentKind::Torus || env.size() != n)
    throw std::invalid_argument("solve_global: environment does not match the torus");
  FlowProblem p;
  p.graph = &torus.graph();
  p.cost = env.cost();
  const double d = 1.0 / (double(n) * n * n);
  for (int s = 0; s < n * n; ++s)
    p.commodities.push_back({s, {}, d});
  auto u0 = std::make_shared<const FlowVolume>(uniform_source_volume(n));
  FixedFlow uni;
  uni.name = "uniform";
  uni.volume = uniform_flow(n).volume;
  uni.commodity_volume = [u0, n](int s) {
    return translate_torus_volume(*u0, n, {s % n, s / n});
  };
  uni.commodity_dot = [u0, n](int s, const Eigen::VectorXd &w) {
    return w.dot(translate_torus_volume(*u0, n, {s % n, s / n}));
  };
  p.fixed.push_back(std::move(uni));
  p.repair_reference = 0;
  p.start_fixed = 0;
  return p;
}

FlowProblem local_problem(const ExtendedSquare &sq, const Environment &env,
                          const TransportMeasure &q) {
  const int m = sq.size();
  if (env.kind() != EnvironmentKind::Square || env.size() != m)
    throw std::invalid_argument("solve_local: environment does not match the square");
  if (q.m != m)
    throw std::invalid_argument("solve_local: transport measure has the wrong size");
  if ((q.mass.array() < 0.0).any())
    throw std::invalid_argument("solve_local: transport measure has negative entries");
  FlowProblem p;
  p.graph = &sq.graph();
  p.cost = env.cost();
  std::vector<int> rows;
  for (int a = 0; a < 4 * m; ++a) {
    Commodity c{sq.boundary_vertex(boundary_point(a, m)), {}, 0.0};
    for (int b = 0; b < 4 * m; ++b)
      if (q.mass(a, b) > 0.0)
        c.demands.push_back({sq.boundary_vertex(boundary_point(b, m)), q.mass(a, b)});
    if (!c.demands.empty()) {
      p.commodities.push_back(std::move(c));
      rows.push_back(a);
    }
  }
  if (p.commodities.empty())
    return p;
  // Per-source router volumes for repair and for the residual.
  auto parts = std::make_shared<std::vector<FlowVolume>>();
  FlowVolume total = FlowVolume::Zero(sq.num_edges());
  for (int a : rows) {
    TransportMeasure row(m);
    row.mass.row(a) = q.mass.row(a);
    parts->push_back(flo(router_lemma9(sq, row), sq.num_edges()));
    total += parts->back();
  }
  FixedFlow router;
  router.name = "router";
  router.volume = total;
  router.commodity_volume = [parts](int k) { return (*parts)[k]; };
  router.commodity_dot = [parts](int k, const Eigen::VectorXd &w) { return w.dot((*parts)[k]); };
  p.fixed.push_back(std::move(router));
  p.repair_reference = 0;
  return p;
}

SolveResult solve_global(int n, const Environment &env, const SolverConfig &cfg,
                         const SolveOptions &opts) {
  if (n > cfg.max_n)
    throw std::invalid_argument("solve_global: N exceeds the configured size guard");
  if (cfg.cap < 0.25)
    throw std::invalid_argument("B must be at least 1/4 for standardized global flows");
  const Torus torus(n);
  FlowProblem p = global_problem(torus, env);
  if (cfg.cap == 0.25 && n % 2 == 0) {
    // The only feasible flow-volume is the uniform one.
    const auto start = Clock::now();
    SolveResult r;
    r.flow = p.fixed[0].volume;
    r.objective = cost(r.flow, env);
    r.lower_bound = r.objective;
    r.converged = true;
    r.max_volume = r.flow.maxCoeff();
    auto dec = std::make_shared<Decomposition>();
    dec->num_edges = static_cast<int>(r.flow.size());
    for (int k = 0; k < static_cast<int>(p.commodities.size()); ++k)
      dec->blocks.push_back({Atom{sparse_volume(p.fixed[0].commodity_volume(k)), 0, 1.0}});
    r.decomposition = dec;
    if (cfg.compute_residual)
      r.waldrop_residual = waldrop_residual(
          p, *dec, marginal_weights(p.cost, r.flow, cfg.cap, 0.0, cfg.weight_floor));
    r.walltime = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
  }
  return frank_wolfe(p, cfg, opts);
}

bool local_cap_admissible(const TransportMeasure &q, double cap) {
  const auto ent = q.entrance();
  const auto exi = q.exit();
  for (int b = 0; b < 4 * q.m; ++b)
    if (ent[b] + exi[b] - 2.0 * q.mass(b, b) > cap * (1.0 + 1e-12))
      return false;
  return true;
}

double lemma9_probe(const TransportMeasure &q) {
  const ExtendedSquare sq(q.m);
  if (q.total() == 0.0)
    return 0.0;
  return flo(router_lemma9(sq, q), sq.num_edges()).maxCoeff();
}

SolveResult solve_local(int m, const Environment &env, const TransportMeasure &q,
                        const SolverConfig &cfg, const SolveOptions &opts) {
  const ExtendedSquare sq(m);
  FlowProblem p = local_problem(sq, env, q);
  if (p.commodities.empty()) {
    SolveResult r;
    r.flow = FlowVolume::Zero(sq.num_edges());
    r.converged = true;
    r.decomposition = std::make_shared<Decomposition>();
    return r;
  }
  if (!local_cap_admissible(q, cfg.cap)) {
    SolveResult r;
    r.flow = FlowVolume::Zero(sq.num_edges());
    r.objective = std::numeric_limits<double>::infinity();
    r.gap = std::numeric_limits<double>::infinity();
    r.infeasible = true;
    r.decomposition = std::make_shared<Decomposition>();
    return r;
  }
  return frank_wolfe(p, cfg, opts);
}

} // namespace latflow
