#pragma once

#include "anomalykit/error.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace anomalykit {

using Complex = std::complex<double>;

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Supported sizes: 8, 16, 32, 64.
const GaussRule& gauss_legendre(int n);

struct AdaptiveOptions {
  double rel_tol = 1e-12;
  int max_depth = 20;
};

/// Recursive bisection with 16-point panels. A panel is accepted once the
/// split estimate changes by less than rel_tol times the integral of |f|
/// over [a, b]. Throws SolverError past max_depth.
Complex adaptive_integrate(const std::function<Complex(double)>& f, double a, double b,
                           const AdaptiveOptions& opt = {});

/// Fixed n-point rule on [a, b].
template <class F>
auto gauss_integrate(F&& f, double a, double b, int n) -> decltype(f(a)) {
  const GaussRule& r = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  decltype(f(a)) sum{};
  for (std::size_t k = 0; k < r.x.size(); ++k) sum += r.w[k] * f(mid + half * r.x[k]);
  return sum * half;
}

}  // namespace anomalykit
