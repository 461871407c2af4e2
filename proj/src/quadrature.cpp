#include "anomalykit/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <string>

namespace anomalykit {
namespace {

template <unsigned N>
GaussRule expand_rule() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& xs = Rule::abscissa();
  const auto& ws = Rule::weights();
  GaussRule r;
  // boost stores the nonnegative half; x = 0 comes first for odd N
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k] == 0.0) {
      r.x.push_back(0.0);
      r.w.push_back(ws[k]);
      continue;
    }
    r.x.push_back(-xs[k]);
    r.w.push_back(ws[k]);
    r.x.push_back(xs[k]);
    r.w.push_back(ws[k]);
  }
  std::vector<std::size_t> order(r.x.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.x[a] < r.x[b]; });
  GaussRule sorted;
  for (std::size_t k : order) {
    sorted.x.push_back(r.x[k]);
    sorted.w.push_back(r.w[k]);
  }
  return sorted;
}

struct Panel {
  double a;
  double b;
  Complex value;
  int depth;
};

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const GaussRule r8 = expand_rule<8>();
  static const GaussRule r16 = expand_rule<16>();
  static const GaussRule r32 = expand_rule<32>();
  static const GaussRule r64 = expand_rule<64>();
  switch (n) {
    case 8: return r8;
    case 16: return r16;
    case 32: return r32;
    case 64: return r64;
    default: throw ConfigError("unsupported Gauss-Legendre size " + std::to_string(n));
  }
}

Complex adaptive_integrate(const std::function<Complex(double)>& f, double a, double b, const AdaptiveOptions& opt) {
  if (a == b) return 0.0;
  // magnitude reference from eight coarse panels of |f|
  double scale = 0.0;
  const double width = (b - a) / 8.0;
  for (int p = 0; p < 8; ++p) {
    const double pa = a + p * width;
    scale += gauss_integrate([&](double x) { return std::abs(f(x)); }, pa, pa + width, 16);
  }
  scale = std::abs(scale);
  if (scale == 0.0) return 0.0;
  const double tol = opt.rel_tol * scale;

  Complex total = 0.0;
  std::vector<Panel> stack;
  stack.push_back({a, b, gauss_integrate(f, a, b, 16), 0});
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double m = 0.5 * (p.a + p.b);
    const Complex left = gauss_integrate(f, p.a, m, 16);
    const Complex right = gauss_integrate(f, m, p.b, 16);
    const Complex split = left + right;
    // tolerance share proportional to the panel width
    const double share = tol * std::max((p.b - p.a) / (b - a), 1e-6);
    if (std::abs(split - p.value) <= share) {
      total += split;
      continue;
    }
    if (p.depth + 1 > opt.max_depth) {
      throw SolverError("adaptive quadrature did not converge within " + std::to_string(opt.max_depth) +
                        " refinement levels on [" + std::to_string(p.a) + ", " + std::to_string(p.b) + "]");
    }
    stack.push_back({m, p.b, right, p.depth + 1});
    stack.push_back({p.a, m, left, p.depth + 1});
  }
  return total;
}

}  // namespace anomalykit
