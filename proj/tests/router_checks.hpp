#pragma once

// Exact-arithmetic checks of the router volume bounds, shared by the unit
// tests and the acceptance runner.

#include "latflow/routers.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <Eigen/Core>

#include <random>
#include <string>
#include <vector>

namespace latflow::test {

using Rational = boost::multiprecision::cpp_rational;
using RVector = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;
using RTransport = BasicTransport<Rational>;

struct RouterCheck {
  int instances = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

inline Rational max_of(const RVector &v) {
  Rational m = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] > m)
      m = v[i];
  return m;
}

// Random rational in {0, 1/d, ..., d/d} with about half the entries zero.
inline Rational random_weight(std::mt19937_64 &gen, int d = 7) {
  std::uniform_int_distribution<int> pick(-d, d);
  const int k = pick(gen);
  return k <= 0 ? Rational(0) : Rational(k, d);
}

inline void check_lemma8(RouterCheck &out, std::mt19937_64 &gen) {
  for (int m = 1; m <= 6; ++m) {
    const ExtendedSquare sq(m);
    std::vector<RVector> cases;
    for (int k = 0; k < 4 * m; ++k) {
      RVector unit = RVector::Constant(4 * m, Rational(0));
      unit[k] = 1;
      cases.push_back(unit);
    }
    cases.push_back(RVector::Constant(4 * m, Rational(1)));
    for (int r = 0; r < 3; ++r) {
      RVector v(4 * m);
      for (int k = 0; k < 4 * m; ++k)
        v[k] = random_weight(gen);
      cases.push_back(v);
    }
    for (const RVector &rho : cases) {
      ++out.instances;
      const auto mu = router_lemma8<Rational>(sq, rho);
      const RVector f = flo(mu, sq.num_edges());
      if (max_of(f) > 2 * max_of(rho))
        out.failures.push_back("lemma8 bound, M=" + std::to_string(m));
      // Every boundary point sends rho(b) spread evenly over the cells.
      for (const auto &[pair, w] : tra(mu))
        if (w * m * m != rho[boundary_index(sq.boundary_of_vertex(pair.first), m)])
          out.failures.push_back("lemma8 transport, M=" + std::to_string(m));
    }
  }
}

inline void check_lemma9(RouterCheck &out, std::mt19937_64 &gen) {
  for (int m = 1; m <= 6; ++m) {
    const ExtendedSquare sq(m);
    std::vector<RTransport> cases;
    for (int a = 0; a < 4 * m; ++a) {
      RTransport q(m);
      q.mass(a, (a + 1 + m) % (4 * m)) = 1;
      cases.push_back(q);
    }
    for (int r = 0; r < 2; ++r) {
      RTransport q(m);
      for (int a = 0; a < 4 * m; ++a)
        for (int b = 0; b < 4 * m; ++b)
          q.mass(a, b) = random_weight(gen, 5) * random_weight(gen, 5);
      cases.push_back(q);
    }
    cases.push_back(RTransport(m));
    for (const RTransport &q : cases) {
      ++out.instances;
      const auto mu = router_lemma9<Rational>(sq, q);
      const RVector f = flo(mu, sq.num_edges());
      const Rational bound = 2 * (max_of(q.exit()) + max_of(q.entrance()));
      if (f.size() > 0 && max_of(f) > bound)
        out.failures.push_back("lemma9 bound, M=" + std::to_string(m));
      RTransport back(m);
      for (const auto &[pair, w] : tra(mu))
        back.mass(boundary_index(sq.boundary_of_vertex(pair.first), m),
                  boundary_index(sq.boundary_of_vertex(pair.second), m)) += w;
      if (back.mass != q.mass)
        out.failures.push_back("lemma9 transport, M=" + std::to_string(m));
    }
  }
}

inline void check_lemma10(RouterCheck &out, std::mt19937_64 &gen) {
  for (int k = 1; k <= 6; ++k) {
    const ExtendedSquare sq(k);
    std::vector<RVector> cases{RVector::Constant(k, Rational(1))};
    for (int x = 0; x < k; ++x) {
      RVector unit = RVector::Constant(k, Rational(0));
      unit[x] = 1;
      cases.push_back(unit);
    }
    for (int r = 0; r < 3; ++r) {
      RVector v(k);
      for (int x = 0; x < k; ++x)
        v[x] = random_weight(gen);
      cases.push_back(v);
    }
    for (std::size_t c = 0; c < cases.size(); ++c) {
      ++out.instances;
      const auto mu = router_lemma10<Rational>(sq, cases[c]);
      const RVector f = flo(mu, sq.num_edges());
      if (max_of(f) > max_of(cases[c]))
        out.failures.push_back("lemma10 bound, K=" + std::to_string(k));
      if (c == 0) {
        for (int j = 0; j < k; ++j)
          for (int i = 0; i < k; ++i)
            if (f[sq.assigned_edge(i, j, Axis::Vertical)] != 1)
              out.failures.push_back("lemma10 vertical edge, K=" + std::to_string(k));
        for (int i = 0; i < k; ++i)
          if (f[sq.half_edge({Side::Top, i})] != 1)
            out.failures.push_back("lemma10 top half-edge, K=" + std::to_string(k));
      }
    }
  }
}

inline void check_lemma7(RouterCheck &out) {
  for (int n = 2; n <= 6; ++n) {
    const Torus torus(n);
    for (int l = 1; l <= n; l += 2) {
      ++out.instances;
      const auto mu = router_lemma7<Rational>(torus, l);
      const RVector f = flo(mu, torus.num_edges());
      const Rational bound(l, 4 * n * n);
      if (max_of(f) > bound)
        out.failures.push_back("lemma7 bound, N=" + std::to_string(n) + " L=" + std::to_string(l));
      // Both marginals uniform.
      std::vector<Rational> from(n * n), to(n * n);
      for (const auto &[pair, w] : tra(mu)) {
        from[pair.first] += w;
        to[pair.second] += w;
      }
      for (int v = 0; v < n * n; ++v)
        if (from[v] != Rational(1, n * n) || to[v] != Rational(1, n * n))
          out.failures.push_back("lemma7 marginal, N=" + std::to_string(n));
    }
  }
}

inline RouterCheck check_all_routers(unsigned seed = 7) {
  std::mt19937_64 gen(seed);
  RouterCheck out;
  check_lemma7(out);
  check_lemma8(out, gen);
  check_lemma9(out, gen);
  check_lemma10(out, gen);
  return out;
}

} // namespace latflow::test
