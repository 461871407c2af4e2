/// @file linearization.hpp
/// @brief Epsilon-derivatives of the discrete forward scheme up to third
/// order and their finite-difference consistency check.
///
/// Every order reuses the forward stencils, time step and boundary mode,
/// so the cascade is the exact derivative of the discrete solution map.
#pragma once

#include "anomalykit/forward.hpp"

#include <string>
#include <vector>

namespace anomalykit {

/// u(0; eps) = u0 + eps f1 + eps^2/2 f2, v(0; eps) = eps g1 + eps^2/2 g2.
/// Empty field lists mean zero.
struct DataFamily {
  std::vector<double> base;
  std::vector<Field> f1, f2, g1, g2;
  std::vector<double> ladder{0.1, 0.05, 0.025, 0.0125};

  /// Sizes, the sign conditions f1 >= 0 (u0 = 0) and g1 >= 0, and a strictly
  /// decreasing ladder of at least four entries.
  void validate(const Grid& g, int chemicals, int prey) const;
  State at(double eps, const Grid& g, int chemicals, int prey) const;
  /// d^l/deps^l of the data at eps = 0 (l >= 1; zero beyond order 2).
  State derivative(int l, const Grid& g, int chemicals, int prey) const;
};

struct CascadeSetup {
  Grid grid{16, 16, Rect{}};
  ModelParams params;
  ReactionOnGrid reaction;
  BoundaryKind bc = BoundaryKind::kNeumann;
  bool stationary = false;
  double dt = 1e-3;
  int store_every = 1;
};

/// orders[l-1] holds the l-th derivative. Parabolic runs keep every time
/// level n = 0..steps; stationary runs hold one state.
struct CascadeSolution {
  bool stationary = false;
  double dt = 0.0;
  std::vector<std::vector<State>> orders;

  int max_order() const { return static_cast<int>(orders.size()); }
  const State& final_state(int l) const { return orders[static_cast<std::size_t>(l - 1)].back(); }
  std::size_t levels() const { return orders.empty() ? 0 : orders.front().size(); }
};

CascadeSolution solve_first_order(const CascadeSetup& s, const DataFamily& fam);
/// Extends `lower` (orders 1..l-1) by order l = lower.max_order() + 1 <= 3.
CascadeSolution solve_next_order(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& lower);
CascadeSolution solve_second_order(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& first);
CascadeSolution solve_cascade(const CascadeSetup& s, const DataFamily& fam, int max_order);

struct ConvergenceReport {
  std::vector<double> eps;
  std::vector<double> first_error;
  std::vector<double> second_error;
  double first_slope = 0.0;
  double second_slope = 0.0;
  bool first_monotone = false;
  bool second_monotone = false;
  double first_tolerance = 0.25;
  double second_tolerance = 0.3;
  bool pass = false;
};

/// Least-squares slope of log(y) against log(x); NaN if any y <= 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Compares nonlinear solves along the ladder against the cascade (orders
/// 1 and 2), measuring every field at every stored level.
ConvergenceReport finite_difference_check(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& cascade,
                                          int jobs = 1);

}  // namespace anomalykit
