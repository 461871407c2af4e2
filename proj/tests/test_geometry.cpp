#include "anomalykit/cgo.hpp"
#include "anomalykit/error.hpp"
#include "anomalykit/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace anomalykit;
constexpr double kPi = std::numbers::pi;

TEST_CASE("circle distance, normal and projection are exact") {
  const Inclusion c = Inclusion::circle({0.4, 0.6}, 0.2);
  CHECK(c.signed_distance({0.4, 0.6}) == doctest::Approx(-0.2));
  CHECK(c.signed_distance({0.7, 0.6}) == doctest::Approx(0.1));
  const Vec2 n = c.normal({0.4, 0.9});
  CHECK(n.x() == doctest::Approx(0.0));
  CHECK(n.y() == doctest::Approx(1.0));
  const Vec2 q = c.project_to_boundary({0.1, 0.2});
  CHECK((q - Vec2(0.4, 0.6)).norm() == doctest::Approx(0.2));
  CHECK(c.area() == doctest::Approx(kPi * 0.04));
  for (const Vec2& p : c.boundary_samples(17)) CHECK(std::abs(c.signed_distance(p)) < 1e-14);
}

TEST_CASE("polygon distance against a brute-force segment oracle") {
  const std::vector<Vec2> v = {{0.3, 0.3}, {0.7, 0.35}, {0.6, 0.7}, {0.35, 0.6}};
  const Inclusion poly = Inclusion::polygon(v);
  auto seg = [](const Vec2& p, const Vec2& a, const Vec2& b) {
    const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
    return (p - (a + t * (b - a))).norm();
  };
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Vec2 p(u(rng), u(rng));
    double d = 1e9;
    for (std::size_t i = 0; i < v.size(); ++i) d = std::min(d, seg(p, v[i], v[(i + 1) % v.size()]));
    // crossing-number inside test
    bool in = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      if ((v[i].y() > p.y()) != (v[j].y() > p.y()) &&
          p.x() < (v[j].x() - v[i].x()) * (p.y() - v[i].y()) / (v[j].y() - v[i].y()) + v[i].x())
        in = !in;
    }
    CHECK(poly.signed_distance(p) == doctest::Approx(in ? -d : d).epsilon(1e-12));
  }
  // shoelace
  CHECK(poly.area() == doctest::Approx(0.5 * std::abs((0.3 * 0.35 - 0.7 * 0.3) + (0.7 * 0.7 - 0.6 * 0.35) +
                                                      (0.6 * 0.6 - 0.35 * 0.7) + (0.35 * 0.3 - 0.3 * 0.6))));
}

TEST_CASE("parameter vectors round-trip") {
  const Inclusion c = Inclusion::circle({0.45, 0.55}, 0.12);
  CHECK(Inclusion::from_parameters(Inclusion::Kind::kCircle, c.parameters()).parameters() == c.parameters());
  const Inclusion s = Inclusion::star({0.5, 0.5}, {0.2, 0.02, -0.01});
  CHECK(Inclusion::from_parameters(Inclusion::Kind::kStar, s.parameters()).parameters() == s.parameters());
  CHECK(s.kind_name() == "star");
}

TEST_CASE("inclusions must keep two cells from the wall") {
  const Grid g = build_grid(32, 32, Rect{});
  CHECK_NOTHROW(Inclusion::circle({0.5, 0.5}, 0.3).require_inside(g));
  CHECK_THROWS_AS(Inclusion::circle({0.5, 0.5}, 0.45).require_inside(g), GeometryError);
  CHECK_THROWS_AS(Inclusion::circle({0.5, 0.5}, -0.1), GeometryError);
}

TEST_CASE("rasterized area converges at second order") {
  const Inclusion inc = Inclusion::circle({0.52, 0.47}, 0.23);
  const Inclusion star = Inclusion::star({0.5, 0.5}, {0.22, 0.0, 0.0, 0.03, 0.01});
  for (const Inclusion* shape : {&inc, &star}) {
    std::vector<double> err;
    for (int n : {33, 65, 129, 257}) {
      const Grid g = build_grid(n, n, Rect{});
      const IndicatorField f = rasterize_inclusion(*shape, g);
      for (double x : f.fraction) CHECK((x >= 0.0 && x <= 1.0));
      err.push_back(std::abs(f.area(g) - shape->area()));
    }
    // the finest pair is the asymptotic one
    const double ratio = err[2] / err[3];
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
  const Grid g = build_grid(64, 64, Rect{});
  const IndicatorField f = rasterize_inclusion(inc, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double sd = inc.signed_distance(g.node(k));
    if (sd < -g.h_max()) CHECK(f.fraction[k] == 1.0);
    if (sd > g.h_max()) CHECK(f.fraction[k] == 0.0);
  }
}

TEST_CASE("half-plane box fraction matches closed forms") {
  const Vec2 n(1.0, 0.0);
  CHECK(halfplane_box_fraction(1.0, 1.0, n, 0.0) == doctest::Approx(0.5));
  CHECK(halfplane_box_fraction(1.0, 1.0, n, 0.25) == doctest::Approx(0.25));
  CHECK(halfplane_box_fraction(1.0, 1.0, n, -0.6) == doctest::Approx(1.0));
  const Vec2 diag = Vec2(1.0, 1.0).normalized();
  // triangle cut off the (-,-) corner: x + y <= -1/2 in the unit box
  CHECK(halfplane_box_fraction(1.0, 1.0, diag, 0.5 / std::sqrt(2.0)) == doctest::Approx(0.125));
}

TEST_CASE("polygon corners reproduce the adjacent edges") {
  const std::vector<Vec2> v = {{0.3, 0.3}, {0.7, 0.32}, {0.65, 0.7}, {0.32, 0.62}};
  const Inclusion poly = Inclusion::polygon(v);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const TruncatedCorner c = corner_from_polygon(poly, k, 0.1, build_grid(64, 64, Rect{}));
    CHECK(c.apex(0) == v[k].x());
    const Vec2 next = (v[(k + 1) % v.size()] - v[k]).normalized();
    const Vec2 prev = (v[(k + v.size() - 1) % v.size()] - v[k]).normalized();
    double best_next = -2.0, best_prev = -2.0;
    for (const auto& e : c.edges) {
      best_next = std::max(best_next, e(0) * next.x() + e(1) * next.y());
      best_prev = std::max(best_prev, e(0) * prev.x() + e(1) * prev.y());
    }
    CHECK(std::abs(best_next - 1.0) <= 1e-12);
    CHECK(std::abs(best_prev - 1.0) <= 1e-12);
    const double interior = std::acos(next.dot(prev));
    CHECK(c.half_angle == doctest::Approx(interior / 2).epsilon(1e-12));
    CHECK(c.half_angle < kPi / 2);
  }
  CHECK_THROWS_AS(corner_from_polygon(poly, 0, 0.3), GeometryError);
}

TEST_CASE("probe direction satisfies the cone condition on sampled points") {
  std::vector<TruncatedCorner> corners;
  for (double beta : {kPi / 12, kPi / 6, kPi / 4, 0.45 * kPi})
    corners.push_back(TruncatedCorner::sector_2d({0.2, 0.3}, Vec2(1.0, 2.0).normalized(), beta, 0.5));
  Eigen::VectorXd apex = Eigen::VectorXd::Zero(3);
  corners.push_back(TruncatedCorner::from_edges(
      apex, {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1)}, 0.7));
  corners.push_back(TruncatedCorner::from_edges(
      apex, {Eigen::Vector3d(1, 0.2, 0.1), Eigen::Vector3d(0.1, 1, 0.3), Eigen::Vector3d(0.2, 0.1, 1)}, 0.4));
  for (const auto& c : corners) {
    const ProbeSpec spec = ProbeSpec::from_corner(c, {20, 40, 80, 160});
    CHECK(spec.rho > 0.0);
    CHECK(spec.condition_holds());
    CHECK(spec.max_direction_cosine() <= -spec.rho + 1e-12);
    CHECK(spec.max_direction_cosine() > -1.0);
    CHECK(std::abs(spec.xi.dot(spec.xi_perp)) < 1e-14);
    CHECK(spec.xi_perp.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("octant corner has the diagonal axis") {
  Eigen::VectorXd apex = Eigen::VectorXd::Zero(3);
  const TruncatedCorner c = TruncatedCorner::from_edges(
      apex, {Eigen::Vector3d(2, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 5)}, 0.7);
  for (int k = 0; k < 3; ++k) CHECK(c.axis(k) == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(std::cos(c.half_angle) == doctest::Approx(1.0 / std::sqrt(3.0)));
  Eigen::VectorXd in(3), out(3);
  in << 0.1, 0.2, 0.3;
  out << 0.1, -0.01, 0.3;
  CHECK(c.contains(in));
  CHECK_FALSE(c.contains(out));
}
