/// @file cgo.hpp
/// @brief Exponentially decaying harmonic probes w = exp(tau (xi + i xi_perp) . (x - apex))
/// and their integrals over truncated corners.
#pragma once

#include "anomalykit/geometry.hpp"
#include "anomalykit/quadrature.hpp"

#include <functional>
#include <string>
#include <vector>

namespace anomalykit {

struct ProbeSpec {
  TruncatedCorner corner;
  Eigen::VectorXd xi;
  Eigen::VectorXd xi_perp;
  double rho = 0.0;
  std::vector<double> tau_ladder;

  static ProbeSpec from_corner(const TruncatedCorner& c, std::vector<double> ladder);

  /// Checks -1 < xi . (x - apex)/|x - apex| <= -rho + 1e-12 on `samples`
  /// seeded points of the corner; returns the largest observed value.
  double max_direction_cosine(int samples = 10000, unsigned seed = 7) const;
  bool condition_holds(int samples = 10000, unsigned seed = 7) const;
  /// Smallest tau * rho * h over the ladder.
  double min_decay_margin() const;
};

Complex cgo_value(const ProbeSpec& spec, double tau, const Eigen::VectorXd& x);

/// Probe sampled on a 2-D grid, zero outside the ball B_h(apex).
struct CgoField {
  std::vector<Complex> values;
  bool clamped = false;  ///< true when nodes outside B_h were zeroed
};
CgoField cgo_field(const ProbeSpec& spec, double tau, const Grid& g);

/// max |discrete Laplacian of w| / (tau^2 max |w|) over nodes whose whole
/// 5-point stencil lies inside B_h.
double cgo_laplacian_residual(const ProbeSpec& spec, double tau, const Grid& g);

/// Integral over K_h of f(x) w(x) with f = 1 by default, in polar (2-D) or
/// spherical (3-D) coordinates about the apex: 32 Gauss-Legendre nodes per
/// angular direction, adaptive radial panels.
Complex corner_integral(const ProbeSpec& spec, double tau, double alpha, const AdaptiveOptions& opt = {});
Complex corner_integral_weighted(const ProbeSpec& spec, double tau, const std::function<double(const Eigen::VectorXd&)>& f,
                                 const AdaptiveOptions& opt = {});

struct BoundaryNorms {
  double face_h1 = 0.0;
  double cap_h1 = 0.0;
  double h1 = 0.0;  ///< over the whole of dK_h
  double face_flux = 0.0;
  double cap_flux = 0.0;
  double flux = 0.0;
  double h1_ratio = 0.0;    ///< h1 / ((2 tau^2 + 1)^{1/2} e^{-rho h tau})
  double flux_ratio = 0.0;  ///< flux / (tau e^{-rho h tau})
  double cap_h1_ratio = 0.0;
  double cap_flux_ratio = 0.0;
};

/// H^1 norm (value plus full gradient) and normal-derivative L^2 norm of w
/// on the flat faces and on the spherical cap, separately and combined.
BoundaryNorms boundary_norm_estimates(const ProbeSpec& spec, double tau);

struct LaplaceTail {
  Complex lhs;       ///< int_0^delta r^alpha e^{-mu r} dr
  Complex rhs;       ///< Gamma(alpha+1)/mu^{alpha+1} - tail
  Complex tail;      ///< int_delta^inf r^alpha e^{-mu r} dr
  double residual = 0.0;
  bool bound_applies = false;  ///< Re mu >= 2 alpha / e
  double bound = 0.0;          ///< (2/Re mu) e^{-Re mu delta/2}
  bool bound_holds = true;
};

LaplaceTail laplace_tail_identity(double alpha, Complex mu, double delta);

struct AsymptoticFit {
  double exponent = 0.0;
  double constant = 0.0;
  double r2 = 0.0;
};

/// Least squares of log|I| against log tau. Needs >= 4 nonzero finite values.
AsymptoticFit asymptotic_fit(const std::vector<double>& tau, const std::vector<Complex>& values);

struct CornerProbeResult {
  struct Point {
    double tau = 0.0;
    Complex integral;
    Complex weighted;
    BoundaryNorms norms;
  };
  int dim = 2;
  double alpha = 1.0;
  std::vector<Point> points;
  AsymptoticFit fit;
  AsymptoticFit weighted_fit;
  bool large_tau = false;  ///< tau rho h >= 8 at every ladder point
  bool decay_ok = false;
  bool weighted_decay_ok = false;
  bool lower_bound_ok = false;
  bool cap_ratios_monotone = false;
  bool full_ratios_monotone = false;
};

/// Runs the ladder; tolerances are 0.05 (2-D) / 0.1 (3-D) on the plain
/// exponent and 0.08 on the weighted one.
CornerProbeResult probe_corner(const ProbeSpec& spec, double alpha = 1.0, int jobs = 1);

}  // namespace anomalykit
