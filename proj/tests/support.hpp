#pragma once

#include "latflow/solver.hpp"
#include "latflow/transport.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <random>

namespace latflow::test {

// Random sparse measure with about `density` of the entries nonzero.
inline TransportMeasure random_sparse(int m, double density, std::uint64_t seed,
                                      double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TransportMeasure q(m);
  for (int a = 0; a < 4 * m; ++a)
    for (int b = 0; b < 4 * m; ++b)
      if (a != b && u(gen) < density)
        q.mass(a, b) = scale * u(gen);
  if (q.total() == 0.0)
    q.mass(0, 4 * m - 1) = scale;
  return q;
}

// Scales q so that the one-turn router, hence the optimum, fits under cap.
inline TransportMeasure fit_under(TransportMeasure q, double cap) {
  const double probe = lemma9_probe(q);
  if (probe > cap)
    q.mass *= cap / probe;
  return q;
}

} // namespace latflow::test
