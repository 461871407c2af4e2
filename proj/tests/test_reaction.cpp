#include "anomalykit/error.hpp"
#include "anomalykit/reaction.hpp"

#include <doctest.h>

#include <cmath>

using namespace anomalykit;

namespace {

TaylorReaction sample_branch(double jump, bool quadratic_only = false) {
  TaylorReaction r(2, 1, {1.0, 0.5}, 3);
  auto m = [](const char* k) { return parse_multi_index(k, 2, 1); };
  r.set(0, m("u1u1"), Expression::constant(0.5 + jump));
  r.set(0, m("u1u2"), Expression::parse("0.2 + 0.1*x1"));
  r.set(0, m("u1v1"), Expression::constant(-0.3));
  r.set(1, m("u2u2"), Expression::constant(-0.4));
  r.set(1, m("u1v1"), Expression::parse("cos(x2)"));
  if (!quadratic_only) {
    r.set(0, m("u1u1u2"), Expression::constant(0.7));
    r.set(1, m("v1v1v1"), Expression::constant(-1.1));
  }
  return r;
}

PiecewiseReaction sample(bool quadratic_only = false) {
  return PiecewiseReaction(sample_branch(0.5, quadratic_only), sample_branch(0.0, quadratic_only),
                           Inclusion::circle({0.5, 0.5}, 0.2));
}

}  // namespace

TEST_CASE("multi-index parsing is order independent") {
  CHECK(parse_multi_index("u1u2", 2, 1) == MultiIndex{1, 1, 0});
  CHECK(parse_multi_index("u2u1", 2, 1) == parse_multi_index("u1u2", 2, 1));
  CHECK(parse_multi_index("u1v1u1", 2, 1) == MultiIndex{2, 0, 1});
  CHECK(multi_index_order(MultiIndex{2, 0, 1}) == 3);
  CHECK(multi_index_factorial(MultiIndex{2, 0, 3}) == 12.0);
  CHECK(multi_index_name(MultiIndex{1, 0, 1}, 2) == "u1v1");
  CHECK_THROWS_AS(parse_multi_index("u3", 2, 1), ConfigError);
  CHECK_THROWS_AS(parse_multi_index("w1", 2, 1), ConfigError);
}

TEST_CASE("orders below two are rejected") {
  TaylorReaction r(2, 1, {1.0, 0.5}, 3);
  CHECK_THROWS_AS(r.set(0, parse_multi_index("u1", 2, 1), Expression::constant(1.0)), ConfigError);
  CHECK_THROWS_AS(r.set(0, parse_multi_index("u1u1u1u1", 2, 1), Expression::constant(1.0)), ConfigError);
  r.set_unchecked(0, parse_multi_index("u1", 2, 1), Expression::constant(1.0));
  CHECK(r.has_low_order_terms());
}

TEST_CASE("reaction vanishes at the base state") {
  const PiecewiseReaction r = sample();
  for (const Vec2& x : {Vec2(0.5, 0.5), Vec2(0.1, 0.9), Vec2(0.7, 0.5)}) {
    for (double t : {0.0, 0.3}) {
      for (double val : r.eval(x, t, {1.0, 0.5}, {0.0})) CHECK(val == 0.0);
    }
  }
}

TEST_CASE("first derivatives vanish at the base state") {
  const PiecewiseReaction r = sample();
  const double step = 1e-5;
  for (const Vec2& x : {Vec2(0.5, 0.5), Vec2(0.2, 0.3)}) {
    for (int var = 0; var < 3; ++var) {
      std::vector<double> up{1.0, 0.5}, um{1.0, 0.5}, vp{0.0}, vm{0.0};
      (var < 2 ? up[var] : vp[0]) += step;
      (var < 2 ? um[var] : vm[0]) -= step;
      const auto fp = r.eval(x, 0.0, up, vp);
      const auto fm = r.eval(x, 0.0, um, vm);
      for (std::size_t c = 0; c < fp.size(); ++c) CHECK(std::abs((fp[c] - fm[c]) / (2 * step)) <= 1e-9);
    }
  }
}

TEST_CASE("quadratic truncation is homogeneous of degree two") {
  const PiecewiseReaction r = sample(true);
  for (double lambda : {0.5, -2.0, 3.0}) {
    for (int var = 0; var < 3; ++var) {
      std::vector<double> u1{1.0, 0.5}, ul{1.0, 0.5}, v1{0.0}, vl{0.0};
      const double d = 0.37;
      (var < 2 ? u1[var] : v1[0]) += d;
      (var < 2 ? ul[var] : vl[0]) += lambda * d;
      const auto a = r.eval({0.3, 0.4}, 0.0, ul, vl);
      const auto b = r.eval({0.3, 0.4}, 0.0, u1, v1);
      for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == doctest::Approx(lambda * lambda * b[c]).epsilon(1e-13));
    }
  }
}

TEST_CASE("permuted indices give bit-identical evaluations") {
  TaylorReaction a(2, 1, {1.0, 0.5}, 3), b(2, 1, {1.0, 0.5}, 3);
  a.set(0, parse_multi_index("u1u2v1", 2, 1), Expression::constant(0.9));
  b.set(0, parse_multi_index("v1u2u1", 2, 1), Expression::constant(0.9));
  for (double s : {0.1, 0.7}) CHECK(a.eval(0, {0.2, 0.2}, 0.0, {1.0 + s, 0.5 - s}, {s}) ==
                                    b.eval(0, {0.2, 0.2}, 0.0, {1.0 + s, 0.5 - s}, {s}));
}

TEST_CASE("series value matches a hand expansion") {
  TaylorReaction r(1, 1, {2.0}, 3);
  r.set(0, parse_multi_index("u1u1", 1, 1), Expression::constant(3.0));
  r.set(0, parse_multi_index("u1v1", 1, 1), Expression::constant(-1.0));
  r.set(0, parse_multi_index("v1v1v1", 1, 1), Expression::constant(12.0));
  const double p = 0.3, q = 0.2;
  CHECK(r.eval(0, {0, 0}, 0.0, {2.0 + p}, {q}) == doctest::Approx(3.0 * p * p / 2 - p * q + 12.0 * q * q * q / 6));
}

TEST_CASE("time profile scales the series") {
  TaylorReaction r(1, 0, {0.0}, 2);
  r.set(0, parse_multi_index("u1u1", 1, 0), Expression::constant(2.0));
  r.profile.knots = {{0.0, 1.0}, {1.0, 3.0}};
  CHECK(r.eval(0, {0, 0}, 0.5, {1.0}, {}) == doctest::Approx(2.0));
  CHECK(r.eval(0, {0, 0}, 2.0, {1.0}, {}) == doctest::Approx(3.0));
}

TEST_CASE("admissibility report finds the jump and is reproducible") {
  const PiecewiseReaction r = sample();
  const AdmissibilityReport a = check_admissibility(r);
  CHECK(a.admissible());
  CHECK(a.max_jump.at("G1_u1u1") == doctest::Approx(0.5));
  CHECK(check_admissibility(r) == a);
  const Grid g = build_grid(32, 32, Rect{});
  CHECK(check_admissibility(r, g) == check_admissibility(r, g));
  const PiecewiseReaction same(sample_branch(0.0), sample_branch(0.0), Inclusion::circle({0.5, 0.5}, 0.2));
  CHECK_FALSE(check_admissibility(same).jump_present);
  CHECK(jump_magnitude(r, {0.7, 0.5}, 0, parse_multi_index("u1u1", 2, 1), 0.05) == doctest::Approx(0.5));
  CHECK_THROWS_AS(jump_magnitude(r, {0.5, 0.5}, 0, parse_multi_index("u1u1", 2, 1), 0.05), GeometryError);
}

TEST_CASE("grid reaction agrees with the pointwise branches") {
  const PiecewiseReaction r = sample();
  const Grid g = build_grid(32, 32, Rect{});
  const ReactionOnGrid rg(r, g, rasterize_inclusion(r.inclusion(), g));
  const double w[3] = {1.2, 0.35, 0.1};
  for (std::size_t k = 0; k < g.size(); k += 37) {
    const Vec2 x = g.node(k);
    const auto& branch = rg.interior(k) ? r.interior() : r.exterior();
    for (int c = 0; c < 2; ++c)
      CHECK(rg.eval(c, k, 0.0, w) == doctest::Approx(branch.eval(c, x, 0.0, {1.2, 0.35}, {0.1})).epsilon(1e-13));
  }
}
