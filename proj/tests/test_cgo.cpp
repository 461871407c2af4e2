#include "anomalykit/cgo.hpp"
#include "anomalykit/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace anomalykit;
constexpr double kPi = std::numbers::pi;

namespace {

const std::vector<double> kLadder{20, 40, 80, 160};

ProbeSpec sector(double half_angle, Vec2 apex = {0, 0}, Vec2 axis = {1, 0}) {
  return ProbeSpec::from_corner(TruncatedCorner::sector_2d(apex, axis.normalized(), half_angle, 0.6), kLadder);
}

ProbeSpec octant() {
  Eigen::VectorXd apex = Eigen::VectorXd::Zero(3);
  return ProbeSpec::from_corner(TruncatedCorner::from_edges(apex,
                                                            {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                                                             Eigen::Vector3d(0, 0, 1)},
                                                            0.7),
                                kLadder);
}

// composite Simpson on [a, b]
Complex simpson(const std::function<Complex(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  Complex s = f(a) + f(b);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
  for (int n : {8, 16, 32, 64}) {
    const GaussRule& r = gauss_legendre(n);
    double sum_w = 0.0;
    for (double w : r.w) sum_w += w;
    CHECK(sum_w == doctest::Approx(2.0).epsilon(1e-14));
    const int deg = 2 * n - 2;  // even degree below the exactness limit
    const double val = gauss_integrate([deg](double x) { return std::pow(x, deg); }, -1.0, 1.0, n);
    CHECK(val == doctest::Approx(2.0 / (deg + 1)).epsilon(1e-12));
  }
  CHECK_THROWS(gauss_legendre(7));
}

TEST_CASE("adaptive quadrature of a complex exponential") {
  const Complex mu(3.0, 40.0);
  const Complex got = adaptive_integrate([&](double r) { return std::exp(-mu * r); }, 0.0, 2.0);
  const Complex want = (1.0 - std::exp(-2.0 * mu)) / mu;
  CHECK(std::abs(got - want) <= 1e-12 * std::abs(want));
}

TEST_CASE("probe is harmonic and decays into the corner") {
  const ProbeSpec s = sector(kPi / 6);
  Eigen::VectorXd x(2), y(2);
  x << 0.05, 0.01;
  y << 0.3, 0.05;
  CHECK(std::abs(cgo_value(s, 40.0, y)) < std::abs(cgo_value(s, 40.0, x)));
  std::vector<double> res;
  for (int n : {129, 257}) {
    const Grid g = build_grid(n, n, Rect{-0.5, 0.5, -0.5, 0.5});
    res.push_back(cgo_laplacian_residual(s, 20.0, g));
  }
  // the 5-point stencil error is second order
  CHECK(res[0] / res[1] == doctest::Approx(4.0).epsilon(0.05));
  const Grid g = build_grid(64, 64, Rect{-1.0, 1.0, -1.0, 1.0});
  CHECK(cgo_field(s, 20.0, g).clamped);
}

TEST_CASE("sector integrals match the closed form of the infinite sector") {
  // over the full cone: int w = sin(2 beta) / tau^2 and int r w = 4 sin(3 beta) / (3 tau^3)
  for (double beta : {kPi / 12, kPi / 6, kPi / 4}) {
    for (const Vec2& axis : {Vec2(1, 0), Vec2(-1, 2)}) {
      const ProbeSpec s = sector(beta, {0.3, -0.2}, axis);
      for (double tau : {80.0, 160.0}) {
        const Complex plain = corner_integral(s, tau, 0.0);
        const Complex weighted = corner_integral(s, tau, 1.0);
        const double want = std::sin(2 * beta) / (tau * tau);
        const double want_w = 4 * std::sin(3 * beta) / (3 * tau * tau * tau);
        CHECK(std::abs(plain - want) <= 1e-9 * want);
        CHECK(std::abs(weighted - want_w) <= 1e-9 * want_w);
      }
    }
  }
}

TEST_CASE("octant integral matches the product formula") {
  const ProbeSpec s = octant();
  for (double tau : {80.0, 160.0}) {
    Complex prod = 1.0;
    for (int k = 0; k < 3; ++k) prod *= tau * Complex(s.xi(k), s.xi_perp(k));
    const Complex want = -1.0 / prod;
    CHECK(std::abs(corner_integral(s, tau, 0.0) - want) <= 1e-8 * std::abs(want));
  }
}

TEST_CASE("constant weight reduces to the plain integral") {
  const ProbeSpec s = sector(kPi / 6);
  const Complex a = corner_integral(s, 40.0, 0.0);
  const Complex b = corner_integral_weighted(s, 40.0, [](const Eigen::VectorXd&) { return 1.0; });
  CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
}

TEST_CASE("Laplace tail identity over the parameter sweep") {
  for (double alpha : {0.0, 1.0, 2.5}) {
    for (Complex mu : {Complex(1, 0), Complex(2, 1), Complex(10, 0)}) {
      for (double delta : {0.5, 1.0, 2.0}) {
        const LaplaceTail t = laplace_tail_identity(alpha, mu, delta);
        CHECK(t.residual < 1e-10);
        const Complex oracle =
            simpson([&](double r) { return (alpha == 0.0 ? 1.0 : std::pow(r, alpha)) * std::exp(-mu * r); }, 0.0,
                    delta, 20000);
        CHECK(std::abs(t.lhs - oracle) <= 1e-10 * std::max(1.0, std::abs(oracle)));
        if (alpha == 1.0) {
          const Complex closed = (1.0 - std::exp(-mu * delta) * (1.0 + mu * delta)) / (mu * mu);
          CHECK(std::abs(t.lhs - closed) <= 1e-13);
        }
        CHECK(t.bound_applies == (mu.real() >= 2 * alpha / std::numbers::e));
        if (t.bound_applies) {
          CHECK(t.bound_holds);
          CHECK(std::abs(t.tail) <= t.bound);
        }
      }
    }
  }
}

TEST_CASE("power-law fit recovers exponent and constant") {
  std::vector<Complex> v;
  for (double t : kLadder) v.push_back(Complex(0, 3.0 * std::pow(t, -2.5)));
  const AsymptoticFit f = asymptotic_fit(kLadder, v);
  CHECK(f.exponent == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(f.constant == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK_THROWS(asymptotic_fit({1, 2, 3}, {1, 1, 1}));
}

TEST_CASE("benchmark corners pass the decay, bound and monotonicity checks") {
  for (const ProbeSpec& s : {sector(kPi / 12), sector(kPi / 6), sector(kPi / 4), octant()}) {
    const CornerProbeResult r = probe_corner(s, 1.0);
    CHECK(r.large_tau);
    CHECK(r.decay_ok);
    CHECK(r.lower_bound_ok);
    CHECK(r.cap_ratios_monotone);
    if (r.dim == 2) {
      CHECK(std::abs(r.fit.exponent + 2.0) <= 0.05);
      CHECK(r.weighted_decay_ok);
      CHECK(std::abs(r.weighted_fit.exponent + 3.0) <= 0.08);
    } else {
      CHECK(std::abs(r.fit.exponent + 3.0) <= 0.1);
    }
    for (const auto& p : r.points) {
      CHECK(p.norms.cap_h1 > 0.0);
      CHECK(p.norms.h1 >= p.norms.cap_h1);
      CHECK(p.norms.flux >= p.norms.face_flux);
    }
  }
}

TEST_CASE("probe results are pure") {
  const ProbeSpec s = sector(kPi / 6);
  const CornerProbeResult a = probe_corner(s, 1.0, 1);
  const CornerProbeResult b = probe_corner(s, 1.0, 4);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    CHECK(a.points[k].integral == b.points[k].integral);
    CHECK(a.points[k].weighted == b.points[k].weighted);
    CHECK(a.points[k].norms.h1 == b.points[k].norms.h1);
  }
  CHECK(a.fit.exponent == b.fit.exponent);
}

TEST_CASE("small tau is flagged outside the asymptotic regime") {
  const ProbeSpec s = ProbeSpec::from_corner(TruncatedCorner::sector_2d({0, 0}, {1, 0}, kPi / 4, 0.6), {1, 2, 4, 8});
  CHECK(s.min_decay_margin() < 8.0);
  CHECK_FALSE(probe_corner(s).large_tau);
}
