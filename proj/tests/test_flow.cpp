#include "doctest.h"
#include "latflow/flow.hpp"

#include <stdexcept>

using namespace latflow;

TEST_CASE("paths need adjacent vertices") {
  const Torus t(4);
  const LatticePath p = make_path(t.graph(), {0, 1, 5});
  CHECK(p.length() == 2);
  CHECK(p.entrance() == 0);
  CHECK(p.exit() == 5);
  CHECK(is_self_avoiding(p));
  CHECK_FALSE(is_self_avoiding(make_path(t.graph(), {0, 1, 0})));
  CHECK_THROWS(make_path(t.graph(), {0, 5}));
}

TEST_CASE("flo and tra of a small path-flow") {
  const Torus t(4);
  PathFlow<double> mu{{make_path(t.graph(), {0, 1, 2}), 0.5}, {make_path(t.graph(), {0, 1}), 0.25}};
  const FlowVolume f = flo(mu, t.num_edges());
  CHECK(f.sum() == doctest::Approx(1.25));
  CHECK(f[t.edge_index({1, 0}, Axis::Horizontal)] == 0.75);
  const auto tab = tra(mu);
  CHECK(tab.at({0, 2}) == 0.5);
  CHECK(tab.at({0, 1}) == 0.25);
  CHECK(total_weight(scaled(mu, 2.0)) == 1.5);
  mu[0].weight = -1.0;
  CHECK_THROWS(flo(mu, t.num_edges()));
}

TEST_CASE("cost is sum c f^2") {
  FlowVolume f(3);
  f << 1, 2, 3;
  Eigen::VectorXd c(3);
  c << 1, 0.5, 0;
  CHECK(cost(f, c) == 3.0);
}

TEST_CASE("winding counts net turns around the torus") {
  const Torus t(3);
  const LatticePath loop = make_path(t.graph(), {0, 1, 2, 0});
  CHECK(winding(loop, t) == Eigen::Vector2d(1, 0));
  const LatticePath back = make_path(t.graph(), {0, 3, 6, 0});
  CHECK(winding(back, t) == Eigen::Vector2d(0, 1));
}

TEST_CASE("uniform flow value") {
  CHECK(uniform_flow_value(4) == 8.0 / 32.0);
  CHECK(uniform_flow_value(5) == 12.0 / 50.0);
  const UniformFlow u = uniform_flow(6);
  CHECK(u.volume.size() == 72);
  CHECK((u.volume.array() - u.value).abs().maxCoeff() < 1e-15);
  CHECK(u.mass_per_pair == doctest::Approx(1.0 / 216.0));
}

TEST_CASE("uniform source volumes add up to the uniform flow") {
  for (int n : {3, 4, 5}) {
    const FlowVolume src = uniform_source_volume(n);
    FlowVolume total = FlowVolume::Zero(2 * n * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        total += translate_torus_volume(src, n, {i, j});
    CHECK((total.array() - uniform_flow_value(n)).abs().maxCoeff() < 1e-12);

    // Minimal paths: total volume is N^-3 times the distance sum.
    double dist = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        dist += torus_distance({0, 0}, {i, j}, n);
    CHECK(src.sum() == doctest::Approx(dist / (double(n) * n * n)));
  }
}
