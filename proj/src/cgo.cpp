#include "anomalykit/cgo.hpp"

#include "anomalykit/error.hpp"
#include "anomalykit/parallel.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace anomalykit {
namespace {

constexpr int kAngular = 32;

/// Angular span of a 2-D corner, counterclockwise from start.
void sector_span(const TruncatedCorner& c, double& start, double& span) {
  const Eigen::Vector2d e0 = c.edges[0];
  const Eigen::Vector2d e1 = c.edges[1];
  const double d = std::atan2(e0.x() * e1.y() - e0.y() * e1.x(), e0.dot(e1));
  const double a0 = std::atan2(e0.y(), e0.x());
  start = d > 0 ? a0 : a0 + d;
  span = std::abs(d);
}

/// Visits quadrature directions of the corner's solid angle: visit(direction, weight).
template <class Visit>
void for_each_direction(const TruncatedCorner& c, Visit&& visit) {
  const GaussRule& gl = gauss_legendre(kAngular);
  if (c.dim == 2) {
    double start, span;
    sector_span(c, start, span);
    for (std::size_t k = 0; k < gl.x.size(); ++k) {
      const double phi = start + 0.5 * span * (gl.x[k] + 1.0);
      Eigen::VectorXd dir(2);
      dir << std::cos(phi), std::sin(phi);
      visit(dir, 0.5 * span * gl.w[k]);
    }
    return;
  }
  const Eigen::Vector3d a = c.axis;
  const std::size_t m = c.edges.size();
  for (std::size_t f = 0; f < m; ++f) {
    const Eigen::Vector3d b = c.edges[f];
    const Eigen::Vector3d cc = c.edges[(f + 1) % m];
    const Eigen::Vector3d cross = (b - a).cross(cc - a);
    for (std::size_t is = 0; is < gl.x.size(); ++is) {
      const double s = 0.5 * (gl.x[is] + 1.0);
      const double ws = 0.5 * gl.w[is];
      for (std::size_t it = 0; it < gl.x.size(); ++it) {
        const double t = 0.5 * (gl.x[it] + 1.0);
        const double wt = 0.5 * gl.w[it];
        const Eigen::Vector3d q = a + s * (b - a) + s * t * (cc - b);
        const double qn = q.norm();
        const double jac = std::abs(q.dot(cross)) / (qn * qn * qn) * s;
        visit(Eigen::VectorXd(q / qn), ws * wt * jac);
      }
    }
  }
}

Complex probe_exponent(const ProbeSpec& spec, double tau, const Eigen::VectorXd& d) {
  return Complex(tau * spec.xi.dot(d), tau * spec.xi_perp.dot(d));
}

}  // namespace

ProbeSpec ProbeSpec::from_corner(const TruncatedCorner& c, std::vector<double> ladder) {
  const ProbeDirection pd = probe_direction(c);
  ProbeSpec s;
  s.corner = c;
  s.xi = pd.xi;
  s.xi_perp = pd.xi_perp;
  s.rho = pd.rho;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0)) throw ConfigError("tau ladder entries must be positive");
    if (k > 0 && !(ladder[k] > ladder[k - 1])) throw ConfigError("tau ladder must be increasing");
  }
  s.tau_ladder = std::move(ladder);
  return s;
}

double ProbeSpec::max_direction_cosine(int samples, unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  int accepted = 0;
  Eigen::VectorXd x(corner.dim);
  while (accepted < samples) {
    for (int d = 0; d < corner.dim; ++d) x(d) = corner.apex(d) + corner.radius * unit(rng);
    const Eigen::VectorXd diff = x - corner.apex;
    const double r = diff.norm();
    if (r == 0.0 || !corner.contains(x)) continue;
    ++accepted;
    worst = std::max(worst, xi.dot(diff) / r);
  }
  return worst;
}

bool ProbeSpec::condition_holds(int samples, unsigned seed) const {
  const double c = max_direction_cosine(samples, seed);
  return c > -1.0 && c <= -rho + 1e-12;
}

double ProbeSpec::min_decay_margin() const {
  if (tau_ladder.empty()) return 0.0;
  return tau_ladder.front() * rho * corner.radius;
}

Complex cgo_value(const ProbeSpec& spec, double tau, const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x - spec.corner.apex;
  return std::exp(probe_exponent(spec, tau, d));
}

CgoField cgo_field(const ProbeSpec& spec, double tau, const Grid& g) {
  if (spec.corner.dim != 2) throw ConfigError("grid sampling of the probe is 2-D only");
  CgoField out;
  out.values.assign(g.size(), Complex(0.0, 0.0));
  Eigen::VectorXd x(2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    x = g.node(k);
    if ((x - spec.corner.apex).norm() > spec.corner.radius) {
      out.clamped = true;
      continue;
    }
    out.values[k] = cgo_value(spec, tau, x);
  }
  return out;
}

double cgo_laplacian_residual(const ProbeSpec& spec, double tau, const Grid& g) {
  const CgoField w = cgo_field(spec, tau, g);
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  const double reach = spec.corner.radius - g.h_max();
  double worst = 0.0;
  double wmax = 0.0;
  for (int j = 1; j + 1 < g.ny(); ++j) {
    for (int i = 1; i + 1 < g.nx(); ++i) {
      const Eigen::VectorXd x = g.node(i, j);
      if ((x - spec.corner.apex).norm() > reach) continue;
      const std::size_t k = g.index(i, j);
      const Complex lap = (w.values[k + 1] - 2.0 * w.values[k] + w.values[k - 1]) * ihx2 +
                          (w.values[g.index(i, j + 1)] - 2.0 * w.values[k] + w.values[g.index(i, j - 1)]) * ihy2;
      worst = std::max(worst, std::abs(lap));
      wmax = std::max(wmax, std::abs(w.values[k]));
    }
  }
  if (wmax == 0.0) throw ConfigError("no grid node lies inside the probe ball");
  return worst / (tau * tau * wmax);
}

Complex corner_integral_weighted(const ProbeSpec& spec, double tau, const std::function<double(const Eigen::VectorXd&)>& f,
                                 const AdaptiveOptions& opt) {
  const TruncatedCorner& c = spec.corner;
  const int power = c.dim - 1;
  Complex total = 0.0;
  for_each_direction(c, [&](const Eigen::VectorXd& dir, double weight) {
    const Complex z = probe_exponent(spec, tau, dir);
    const Complex radial = adaptive_integrate(
        [&](double r) {
          const Eigen::VectorXd x = c.apex + r * dir;
          const double fx = f(x);
          if (fx == 0.0) return Complex(0.0, 0.0);
          return fx * std::pow(r, power) * std::exp(z * r);
        },
        0.0, c.radius, opt);
    total += weight * radial;
  });
  return total;
}

Complex corner_integral(const ProbeSpec& spec, double tau, double alpha, const AdaptiveOptions& opt) {
  if (!(alpha >= 0.0)) throw ConfigError("weight exponent must be nonnegative");
  const TruncatedCorner& c = spec.corner;
  const double power = alpha + c.dim - 1;
  Complex total = 0.0;
  for_each_direction(c, [&](const Eigen::VectorXd& dir, double weight) {
    const Complex z = probe_exponent(spec, tau, dir);
    const Complex radial = adaptive_integrate(
        [&](double r) { return (power == 0.0 ? 1.0 : std::pow(r, power)) * std::exp(z * r); }, 0.0, c.radius, opt);
    total += weight * radial;
  });
  return total;
}

BoundaryNorms boundary_norm_estimates(const ProbeSpec& spec, double tau) {
  const TruncatedCorner& c = spec.corner;
  const double h = c.radius;
  const double shift = spec.rho * h * tau;  // divides out e^{-rho h tau}
  const double grad2 = tau * tau * (spec.xi.squaredNorm() + spec.xi_perp.squaredNorm());
  auto flux_factor = [&](const Eigen::VectorXd& nu) {
    const double a = spec.xi.dot(nu);
    const double b = spec.xi_perp.dot(nu);
    return tau * tau * (a * a + b * b);
  };
  const GaussRule& gl = gauss_legendre(kAngular);

  // faces: |w|^2 integrated with the shift so the ratios stay representable
  double face_mass = 0.0;  // int |w|^2 e^{2 shift}
  double face_flux = 0.0;
  auto face_line = [&](const Eigen::VectorXd& dir, double weight, double power) {
    const double lam = 2.0 * tau * spec.xi.dot(dir);
    const Complex val = adaptive_integrate(
        [&](double r) { return Complex(std::pow(r, power) * std::exp(lam * r + 2.0 * shift), 0.0); }, 0.0, h);
    return weight * val.real();
  };
  if (c.dim == 2) {
    for (const auto& e : c.edges) {
      Eigen::VectorXd nu(2);
      nu << -e(1), e(0);
      if (nu.dot(c.axis) > 0) nu = -nu;
      const double m = face_line(e, 1.0, 0.0);
      face_mass += m;
      face_flux += flux_factor(nu) * m;
    }
  } else {
    const std::size_t m = c.edges.size();
    for (std::size_t f = 0; f < m; ++f) {
      const Eigen::Vector3d a = c.edges[f];
      const Eigen::Vector3d b = c.edges[(f + 1) % m];
      Eigen::Vector3d n3 = a.cross(b).normalized();
      if (n3.dot(Eigen::Vector3d(c.axis)) > 0) n3 = -n3;
      const Eigen::VectorXd nu = n3;
      const double angle = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
      const Eigen::Vector3d perp = (b - a.dot(b) * a).normalized();
      double mass = 0.0;
      for (std::size_t k = 0; k < gl.x.size(); ++k) {
        const double psi = 0.5 * angle * (gl.x[k] + 1.0);
        const Eigen::VectorXd dir = Eigen::Vector3d(std::cos(psi) * a + std::sin(psi) * perp);
        mass += face_line(dir, 0.5 * angle * gl.w[k], 1.0);
      }
      face_mass += mass;
      face_flux += flux_factor(nu) * mass;
    }
  }

  double cap_mass = 0.0;
  double cap_flux = 0.0;
  const double cap_scale = c.dim == 2 ? h : h * h;
  for_each_direction(c, [&](const Eigen::VectorXd& dir, double weight) {
    const double dens = std::exp(2.0 * tau * h * spec.xi.dot(dir) + 2.0 * shift) * cap_scale * weight;
    cap_mass += dens;
    cap_flux += flux_factor(dir) * dens;
  });

  BoundaryNorms out;
  const double decay = std::exp(-shift);
  const double h1_bound = std::sqrt(2.0 * tau * tau + 1.0);
  out.face_h1 = std::sqrt((1.0 + grad2) * face_mass) * decay;
  out.cap_h1 = std::sqrt((1.0 + grad2) * cap_mass) * decay;
  out.h1 = std::sqrt((1.0 + grad2) * (face_mass + cap_mass)) * decay;
  out.face_flux = std::sqrt(face_flux) * decay;
  out.cap_flux = std::sqrt(cap_flux) * decay;
  out.flux = std::sqrt(face_flux + cap_flux) * decay;
  out.h1_ratio = std::sqrt((1.0 + grad2) * (face_mass + cap_mass)) / h1_bound;
  out.flux_ratio = std::sqrt(face_flux + cap_flux) / tau;
  out.cap_h1_ratio = std::sqrt((1.0 + grad2) * cap_mass) / h1_bound;
  out.cap_flux_ratio = std::sqrt(cap_flux) / tau;
  return out;
}

LaplaceTail laplace_tail_identity(double alpha, Complex mu, double delta) {
  if (!(alpha > -1.0)) throw ConfigError("alpha must exceed -1");
  if (!(mu.real() > 0.0)) throw ConfigError("mu must have positive real part");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  const double gamma = std::tgamma(alpha + 1.0);
  if (!std::isfinite(gamma)) throw SolverError("Gamma(alpha + 1) overflows");
  const AdaptiveOptions opt{1e-13, 30};

  LaplaceTail out;
  if (alpha < 0.0) {
    // r = s^{1/(alpha+1)} removes the endpoint singularity
    const double p = 1.0 / (alpha + 1.0);
    out.lhs = adaptive_integrate([&](double s) { return std::exp(-mu * std::pow(s, p)); }, 0.0,
                                 std::pow(delta, alpha + 1.0), opt) * p;
  } else {
    out.lhs = adaptive_integrate(
        [&](double r) { return (alpha == 0.0 ? 1.0 : std::pow(r, alpha)) * std::exp(-mu * r); }, 0.0, delta, opt);
  }

  const double re = mu.real();
  const Complex full = gamma / std::pow(mu, alpha + 1.0);
  double upper = delta;
  const double floor = 1e-22 * std::max(1.0, std::abs(full));
  while (std::pow(upper, alpha) * std::exp(-re * upper) > floor) upper += 1.0 / re;
  out.tail = adaptive_integrate(
      [&](double r) { return (alpha == 0.0 ? 1.0 : std::pow(r, alpha)) * std::exp(-mu * r); }, delta, upper, opt);
  out.rhs = full - out.tail;
  out.residual = std::abs(out.lhs - out.rhs);
  out.bound_applies = re >= 2.0 * alpha / std::exp(1.0);
  out.bound = 2.0 / re * std::exp(-re * delta / 2.0);
  out.bound_holds = !out.bound_applies || std::abs(out.tail) <= out.bound;
  return out;
}

AsymptoticFit asymptotic_fit(const std::vector<double>& tau, const std::vector<Complex>& values) {
  if (tau.size() != values.size() || tau.size() < 4) throw ConfigError("asymptotic fit needs at least 4 ladder points");
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double m = std::abs(values[k]);
    if (!(m > 0.0) || !std::isfinite(m)) throw SolverError("asymptotic fit got a zero or non-finite integral");
    lx.push_back(std::log(tau[k]));
    ly.push_back(std::log(m));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  AsymptoticFit fit;
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - fit.exponent * sx) / n;
  fit.constant = std::exp(intercept);
  const double mean = sy / n;
  double ss_tot = 0, ss_res = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double pred = intercept + fit.exponent * lx[k];
    ss_res += (ly[k] - pred) * (ly[k] - pred);
    ss_tot += (ly[k] - mean) * (ly[k] - mean);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

CornerProbeResult probe_corner(const ProbeSpec& spec, double alpha, int jobs) {
  CornerProbeResult res;
  res.dim = spec.corner.dim;
  res.alpha = alpha;
  const std::size_t n = spec.tau_ladder.size();
  res.points.resize(n);
  parallel_for(static_cast<int>(n), jobs, [&](int k) {
    auto& p = res.points[static_cast<std::size_t>(k)];
    p.tau = spec.tau_ladder[static_cast<std::size_t>(k)];
    p.integral = corner_integral(spec, p.tau, 0.0);
    p.weighted = corner_integral(spec, p.tau, alpha);
    p.norms = boundary_norm_estimates(spec, p.tau);
  });
  std::vector<Complex> plain, weighted;
  for (const auto& p : res.points) {
    plain.push_back(p.integral);
    weighted.push_back(p.weighted);
  }
  res.fit = asymptotic_fit(spec.tau_ladder, plain);
  res.weighted_fit = asymptotic_fit(spec.tau_ladder, weighted);
  const double dim = res.dim;
  res.large_tau = spec.min_decay_margin() >= 8.0;
  res.decay_ok = std::abs(res.fit.exponent + dim) <= (res.dim == 2 ? 0.05 : 0.1);
  res.weighted_decay_ok = std::abs(res.weighted_fit.exponent + dim + alpha) <= (res.dim == 2 ? 0.08 : 0.1);

  // constant with the exponent pinned at -n: geometric mean of |I| tau^n
  // over the points where the exponential remainder is below 1e-12
  double log_c = 0.0;
  int used = 0;
  for (int pass = 0; pass < 2 && used == 0; ++pass) {
    for (const auto& p : res.points) {
      if (pass == 0 && std::exp(-spec.rho * spec.corner.radius * p.tau) > 1e-12) continue;
      log_c += std::log(std::abs(p.integral) * std::pow(p.tau, dim));
      ++used;
    }
  }
  const double c_fit = std::exp(log_c / static_cast<double>(used));
  res.lower_bound_ok = true;
  for (const auto& p : res.points) {
    const double bound = c_fit * std::pow(p.tau, -dim) -
                         10.0 / p.tau * std::exp(-spec.rho * spec.corner.radius * p.tau / 2.0);
    if (std::abs(p.integral) < bound * (1.0 - 1e-6)) res.lower_bound_ok = false;
  }
  res.cap_ratios_monotone = true;
  res.full_ratios_monotone = true;
  for (std::size_t k = 1; k < n; ++k) {
    const auto& a = res.points[k - 1].norms;
    const auto& b = res.points[k].norms;
    const double slack = 1.0 + 1e-12;
    res.cap_ratios_monotone &= b.cap_h1_ratio <= a.cap_h1_ratio * slack && b.cap_flux_ratio <= a.cap_flux_ratio * slack;
    res.full_ratios_monotone &= b.h1_ratio <= a.h1_ratio * slack && b.flux_ratio <= a.flux_ratio * slack;
  }
  return res;
}

}  // namespace anomalykit
