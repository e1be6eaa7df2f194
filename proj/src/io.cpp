#include "latflow/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace latflow {
namespace {

std::string expect_key(std::istream &is, const std::string &key) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("unexpected end of file, expected '" + key + "'");
  const auto sp = line.find(' ');
  if (line.substr(0, sp) != key)
    throw std::runtime_error("expected '" + key + "', found '" + line + "'");
  return sp == std::string::npos ? std::string{} : line.substr(sp + 1);
}

void expect_header(std::istream &is, const std::string &magic) {
  std::string line;
  if (!std::getline(is, line) || line != magic + " 1")
    throw std::runtime_error("not a " + magic + " version 1 file");
}

int parse_int(const std::string &s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string &s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

EnvironmentKind parse_kind(const std::string &s) {
  if (s == "torus")
    return EnvironmentKind::Torus;
  if (s == "square")
    return EnvironmentKind::Square;
  throw std::runtime_error("unknown kind '" + s + "'");
}

const char *kind_name(EnvironmentKind k) { return k == EnvironmentKind::Torus ? "torus" : "square"; }

Eigen::VectorXd read_values(std::istream &is, int count) {
  Eigen::VectorXd v(count);
  std::string tok;
  for (int k = 0; k < count; ++k) {
    if (!(is >> tok))
      throw std::runtime_error("file ends after " + std::to_string(k) + " of " +
                               std::to_string(count) + " values");
    v[k] = parse_double(tok);
  }
  return v;
}

nlohmann::ordered_json number(double x) {
  if (std::isnan(x))
    return nullptr;
  return x;
}

} // namespace

std::string format_double(double x) {
  if (std::isnan(x))
    return "NA";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

double parse_double(const std::string &s) {
  if (s == "NA")
    return kNA;
  if (s == "inf")
    return INFINITY;
  if (s == "-inf")
    return -INFINITY;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("bad number '" + s + "'");
  return v;
}

void write_environment(std::ostream &os, const Environment &env) {
  os << "latflow-environment 1\n"
     << "kind " << kind_name(env.kind()) << '\n'
     << "size " << env.size() << '\n'
     << "cstar " << format_double(env.c_star()) << '\n'
     << "seed " << env.seed() << '\n'
     << "dist " << env.dist() << '\n'
     << "edges " << env.num_edges() << '\n';
  for (int e = 0; e < env.num_edges(); ++e)
    os << format_double(env[e]) << '\n';
}

Environment read_environment(std::istream &is) {
  expect_header(is, "latflow-environment");
  const EnvironmentKind kind = parse_kind(expect_key(is, "kind"));
  const int size = parse_int(expect_key(is, "size"));
  const double cstar = parse_double(expect_key(is, "cstar"));
  const std::uint64_t seed = parse_u64(expect_key(is, "seed"));
  std::string dist = expect_key(is, "dist");
  const int edges = parse_int(expect_key(is, "edges"));
  if (edges != expected_edge_count(kind, size))
    throw std::runtime_error("edge count does not match the lattice size");
  return Environment(kind, size, read_values(is, edges), cstar, seed, std::move(dist));
}

void write_flow(std::ostream &os, const FlowFile &f) {
  os << "latflow-flow 1\n"
     << "kind " << kind_name(f.kind) << '\n'
     << "size " << f.size << '\n'
     << "edges " << f.volume.size() << '\n';
  for (Eigen::Index e = 0; e < f.volume.size(); ++e)
    os << format_double(f.volume[e]) << '\n';
}

FlowFile read_flow(std::istream &is) {
  expect_header(is, "latflow-flow");
  FlowFile f;
  f.kind = parse_kind(expect_key(is, "kind"));
  f.size = parse_int(expect_key(is, "size"));
  const int edges = parse_int(expect_key(is, "edges"));
  const int want = f.kind == EnvironmentKind::Torus ? 2 * f.size * f.size
                                                    : 2 * f.size * f.size + 2 * f.size;
  if (edges != want)
    throw std::runtime_error("edge count does not match the lattice size");
  f.volume = read_values(is, edges);
  return f;
}

void write_transport(std::ostream &os, const TransportMeasure &q) {
  os << "latflow-transport 1\n"
     << "m " << q.m << '\n';
  for (int a = 0; a < 4 * q.m; ++a) {
    for (int b = 0; b < 4 * q.m; ++b)
      os << (b ? " " : "") << format_double(q.mass(a, b));
    os << '\n';
  }
}

TransportMeasure read_transport(std::istream &is) {
  expect_header(is, "latflow-transport");
  const int m = parse_int(expect_key(is, "m"));
  if (m < 1)
    throw std::runtime_error("transport measure needs M >= 1");
  const Eigen::VectorXd v = read_values(is, 16 * m * m);
  TransportMeasure q(m);
  for (int a = 0; a < 4 * m; ++a)
    for (int b = 0; b < 4 * m; ++b)
      q.mass(a, b) = v[a * 4 * m + b];
  if ((q.mass.array() < 0.0).any() || !q.mass.allFinite())
    throw std::runtime_error("transport measure must be finite and nonnegative");
  return q;
}

void write_csv(std::ostream &os, const std::vector<ResultRow> &rows) {
  std::vector<std::string> extra;
  for (const auto &r : rows)
    for (const auto &[k, v] : r.extra)
      if (std::find(extra.begin(), extra.end(), k) == extra.end())
        extra.push_back(k);
  os << "experiment,N,M,B,p,seed,objective,gap,residual,walltime";
  for (const auto &k : extra)
    os << ',' << k;
  os << '\n';
  auto size = [](int x) { return x > 0 ? std::to_string(x) : std::string("NA"); };
  for (const auto &r : rows) {
    os << r.experiment << ',' << size(r.n) << ',' << size(r.m) << ',' << format_double(r.b) << ','
       << format_double(r.p) << ',' << r.seed << ',' << format_double(r.objective) << ','
       << format_double(r.gap) << ',' << format_double(r.residual) << ','
       << format_double(r.walltime);
    for (const auto &k : extra) {
      double v = kNA;
      for (const auto &[kk, vv] : r.extra)
        if (kk == k)
          v = vv;
      os << ',' << format_double(v);
    }
    os << '\n';
  }
}

std::string summary_json(const ExperimentReport &rep) {
  nlohmann::ordered_json j;
  j["experiment"] = rep.experiment;
  j["all_converged"] = rep.all_converged;
  j["replicates"] = rep.rows.size();
  nlohmann::ordered_json s = nlohmann::ordered_json::object();
  for (const auto &[k, v] : rep.summary)
    s[k] = number(v);
  j["summary"] = s;
  j["notes"] = rep.notes;
  return j.dump(2) + "\n";
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  static const char *digits = "0123456789abcdef";
  for (int k = 15; k >= 0; --k, h >>= 4)
    buf[k] = digits[h & 0xf];
  buf[16] = '\0';
  return buf;
}

std::string file_hash(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + p.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hash_hex(fnv1a64(bytes.data(), bytes.size()));
}

} // namespace latflow
