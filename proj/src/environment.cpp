#include "latflow/environment.hpp"

#include "latflow/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace latflow {
namespace {

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto *first = text.data();
  const auto *last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value))
    throw std::invalid_argument("distribution: bad " + std::string(what) + " '" +
                                std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return parts;
}

std::string shortest(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

constexpr std::uint64_t kTorusStream = 0x70125;
constexpr std::uint64_t kSquareStream = 0x5c0a7e;

} // namespace

CostDistribution CostDistribution::constant(double c) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw std::invalid_argument("constant cost must be finite and nonnegative");
  CostDistribution d;
  d.kind_ = Kind::Constant;
  d.param_ = c;
  d.c_star_ = c;
  return d;
}

CostDistribution CostDistribution::uniform(double c_star) {
  if (!(c_star > 0.0) || !std::isfinite(c_star))
    throw std::invalid_argument("uniform upper bound must be finite and positive");
  CostDistribution d;
  d.kind_ = Kind::Uniform;
  d.c_star_ = c_star;
  return d;
}

CostDistribution CostDistribution::two_point(double p_zero, double c_star) {
  if (!(p_zero >= 0.0 && p_zero <= 1.0))
    throw std::invalid_argument("two-point probability must lie in [0, 1]");
  if (!(c_star > 0.0) || !std::isfinite(c_star))
    throw std::invalid_argument("two-point cost must be finite and positive");
  CostDistribution d;
  d.kind_ = Kind::TwoPoint;
  d.param_ = p_zero;
  d.c_star_ = c_star;
  return d;
}

CostDistribution CostDistribution::discrete(std::vector<double> values,
                                            std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw std::invalid_argument("discrete distribution needs matching values and weights");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("discrete values must be finite and nonnegative");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("discrete weights must be nonnegative");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("discrete weights must sum to 1");
  CostDistribution d;
  d.kind_ = Kind::Discrete;
  d.c_star_ = *std::max_element(values.begin(), values.end());
  d.cumulative_.resize(weights.size());
  std::partial_sum(weights.begin(), weights.end(), d.cumulative_.begin());
  d.values_ = std::move(values);
  d.weights_ = std::move(weights);
  return d;
}

CostDistribution CostDistribution::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("distribution: expected '<kind>:<params>', got '" +
                                std::string(spec) + "'");
  const auto kind = spec.substr(0, colon);
  const auto rest = spec.substr(colon + 1);
  if (kind == "constant")
    return constant(parse_number(rest, "constant"));
  if (kind == "uniform")
    return uniform(parse_number(rest, "c*"));
  if (kind == "twopoint") {
    const auto parts = split(rest, ':');
    if (parts.size() != 2)
      throw std::invalid_argument("distribution: twopoint needs <p>:<cstar>");
    return two_point(parse_number(parts[0], "p"), parse_number(parts[1], "c*"));
  }
  if (kind == "discrete") {
    std::vector<double> values, weights;
    for (auto item : split(rest, ',')) {
      const auto parts = split(item, ':');
      if (parts.size() != 2)
        throw std::invalid_argument("distribution: discrete items are <value>:<weight>");
      values.push_back(parse_number(parts[0], "value"));
      weights.push_back(parse_number(parts[1], "weight"));
    }
    return discrete(std::move(values), std::move(weights));
  }
  throw std::invalid_argument("distribution: unknown kind '" + std::string(kind) + "'");
}

double CostDistribution::mean() const {
  switch (kind_) {
  case Kind::Constant:
    return param_;
  case Kind::Uniform:
    return 0.5 * c_star_;
  case Kind::TwoPoint:
    return (1.0 - param_) * c_star_;
  case Kind::Discrete:
    return std::inner_product(values_.begin(), values_.end(), weights_.begin(), 0.0);
  }
  return 0.0;
}

bool CostDistribution::is_degenerate() const {
  switch (kind_) {
  case Kind::Constant:
    return true;
  case Kind::Uniform:
    return false;
  case Kind::TwoPoint:
    return param_ == 0.0 || param_ == 1.0;
  case Kind::Discrete:
    return std::count_if(weights_.begin(), weights_.end(), [](double w) { return w > 0; }) <= 1;
  }
  return false;
}

double CostDistribution::sample(double u) const {
  switch (kind_) {
  case Kind::Constant:
    return param_;
  case Kind::Uniform:
    return u * c_star_;
  case Kind::TwoPoint:
    return u < param_ ? 0.0 : c_star_;
  case Kind::Discrete: {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto k = std::min<std::size_t>(it - cumulative_.begin(), values_.size() - 1);
    return values_[k];
  }
  }
  return 0.0;
}

std::string CostDistribution::describe() const {
  switch (kind_) {
  case Kind::Constant:
    return "constant:" + shortest(param_);
  case Kind::Uniform:
    return "uniform:" + shortest(c_star_);
  case Kind::TwoPoint:
    return "twopoint:" + shortest(param_) + ":" + shortest(c_star_);
  case Kind::Discrete: {
    std::string s = "discrete:";
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (k)
        s += ',';
      s += shortest(values_[k]) + ":" + shortest(weights_[k]);
    }
    return s;
  }
  }
  return {};
}

int expected_edge_count(EnvironmentKind kind, int size) {
  return kind == EnvironmentKind::Torus ? 2 * size * size : 2 * size * size + 2 * size;
}

Environment::Environment(EnvironmentKind kind, int size, Eigen::VectorXd cost, double c_star,
                         std::uint64_t seed, std::string dist)
    : kind_(kind), size_(size), cost_(std::move(cost)), c_star_(c_star), seed_(seed),
      dist_(std::move(dist)) {
  if (cost_.size() != expected_edge_count(kind, size))
    throw std::invalid_argument("Environment: edge count does not match graph");
  for (Eigen::Index e = 0; e < cost_.size(); ++e)
    if (!(cost_[e] >= 0.0 && cost_[e] <= c_star_))
      throw std::invalid_argument("Environment: cost outside [0, c*]");
}

Environment Environment::with_cost(int edge, double value) const {
  Eigen::VectorXd c = cost_;
  c[edge] = value;
  return {kind_, size_, std::move(c), c_star_, seed_, dist_};
}

Environment sample_torus_env(int n, const CostDistribution &dist, std::uint64_t seed) {
  const Torus torus(n);
  Eigen::VectorXd cost(torus.num_edges());
  for (int e = 0; e < torus.num_edges(); ++e)
    cost[e] = dist.sample(to_unit(stream_word(seed, kTorusStream, e)));
  return {EnvironmentKind::Torus, n, std::move(cost), dist.c_star(), seed, dist.describe()};
}

Environment sample_square_env(int m, const CostDistribution &dist, std::uint64_t seed) {
  const ExtendedSquare square(m);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(square.num_edges());
  for (int e = 0; e < square.num_assigned_edges(); ++e)
    cost[e] = dist.sample(to_unit(stream_word(seed, kSquareStream, e)));
  return {EnvironmentKind::Square, m, std::move(cost), dist.c_star(), seed, dist.describe()};
}

Environment restrict_env_at(const Environment &torus_env, TorusVertex corner, int m) {
  if (torus_env.kind() != EnvironmentKind::Torus)
    throw std::invalid_argument("restrict_env: expected a torus environment");
  const int n = torus_env.size();
  if (m > n)
    throw std::invalid_argument("restrict_env: square larger than torus");
  const Torus torus(n);
  const ExtendedSquare square(m);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(square.num_edges());
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      for (Axis axis : {Axis::Horizontal, Axis::Vertical})
        cost[square.assigned_edge(i, j, axis)] =
            torus_env[torus.edge_index(torus.wrap(corner.i + i, corner.j + j), axis)];
  return {EnvironmentKind::Square, m, std::move(cost), torus_env.c_star(), torus_env.seed(),
          torus_env.dist()};
}

Environment restrict_env(const Environment &torus_env, int si, int sj, int n, int m) {
  require_divides(m, n);
  if (torus_env.size() != n)
    throw std::invalid_argument("restrict_env: torus size mismatch");
  return restrict_env_at(torus_env, {si * m, sj * m}, m);
}

std::uint64_t fnv1a64(const void *data, std::size_t bytes, std::uint64_t h) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (std::size_t k = 0; k < bytes; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t environment_hash(const Environment &env) {
  std::uint64_t h = fnv1a64(env.cost().data(), sizeof(double) * env.cost().size());
  const int header[2] = {static_cast<int>(env.kind()), env.size()};
  return fnv1a64(header, sizeof header, h);
}

} // namespace latflow
