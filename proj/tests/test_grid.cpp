#include "anomalykit/error.hpp"
#include "anomalykit/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace anomalykit;

TEST_CASE("node coordinates follow from indices") {
  const Grid g = build_grid(17, 33, Rect{-1.0, 3.0, 0.5, 2.5});
  CHECK(g.hx() == doctest::Approx(0.25));
  CHECK(g.hy() == doctest::Approx(2.0 / 32));
  for (int i = 0; i < g.nx(); ++i) CHECK(g.x(i) == -1.0 + 4.0 * i / 16.0);
  CHECK(g.x(16) == 3.0);
  CHECK(g.y(32) == 2.5);
  // rebuilding gives the same bits
  const Grid h = build_grid(17, 33, Rect{-1.0, 3.0, 0.5, 2.5});
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g.node(k) == h.node(k));
}

TEST_CASE("small or degenerate grids are rejected") {
  CHECK_THROWS_AS(build_grid(15, 32, Rect{}), ConfigError);
  CHECK_THROWS_AS(build_grid(32, 32, Rect{0.0, 0.0, 0.0, 1.0}), ConfigError);
}

TEST_CASE("boundary nodes run counterclockwise from the lower-left corner") {
  const Grid g = build_grid(16, 20, Rect{});
  const auto& b = g.boundary_nodes();
  CHECK(b.size() == static_cast<std::size_t>(2 * (16 + 20) - 4));
  CHECK(std::set<std::size_t>(b.begin(), b.end()).size() == b.size());
  CHECK(b.front() == g.index(0, 0));
  CHECK(b[15] == g.index(15, 0));
  CHECK(b[15 + 19] == g.index(15, 19));
  CHECK(b[15 + 19 + 15] == g.index(0, 19));
  CHECK(b.back() == g.index(0, 1));
  for (std::size_t k : b) CHECK(g.is_boundary(k));
}

TEST_CASE("trapezoidal integration is exact for bilinear fields") {
  const Grid g = build_grid(21, 17, Rect{0.0, 2.0, -1.0, 1.0});
  Field f(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 p = g.node(k);
    f[k] = 1.0 + 2.0 * p.x() - 3.0 * p.y() + p.x() * p.y();
  }
  // integral over [0,2]x[-1,1] of 1 + 2x - 3y + xy
  CHECK(g.integrate(f) == doctest::Approx(4.0 + 8.0).epsilon(1e-14));
  double vol = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) vol += g.control_volume(k);
  CHECK(vol == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("interpolation reproduces bilinear fields and nearest node is closest") {
  const Grid g = build_grid(16, 16, Rect{});
  Field f(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) f[k] = 2.0 * g.node(k).x() - g.node(k).y() + 0.5;
  for (double x : {0.013, 0.5, 0.77}) {
    for (double y : {0.1, 0.49}) {
      CHECK(g.interpolate(f, Vec2(x, y)) == doctest::Approx(2 * x - y + 0.5).epsilon(1e-13));
      const std::size_t n = g.nearest_node(Vec2(x, y));
      const double best = (g.node(n) - Vec2(x, y)).norm();
      for (std::size_t k = 0; k < g.size(); ++k) CHECK(best <= (g.node(k) - Vec2(x, y)).norm() + 1e-15);
    }
  }
}

TEST_CASE("outward normals point out of the rectangle") {
  const Grid g = build_grid(16, 16, Rect{});
  CHECK(g.outward_normal(5, 0) == Vec2(0, -1));
  CHECK(g.outward_normal(15, 7) == Vec2(1, 0));
  CHECK(g.outward_normal(3, 3).norm() == 0.0);
  CHECK(g.outward_normal(0, 0).norm() == doctest::Approx(1.0));
}
