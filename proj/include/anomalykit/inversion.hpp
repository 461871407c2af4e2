/// @file inversion.hpp
/// @brief Misfit between measurement sets, inclusion reconstruction,
/// boundary recovery of second-order reaction coefficients and the
/// apex-vanishing classification.
#pragma once

#include "anomalykit/cgo.hpp"
#include "anomalykit/linearization.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace anomalykit {

struct DiscrepancyReport {
  double sup = 0.0;
  double l2 = 0.0;  ///< root mean square over all compared samples
  std::size_t samples = 0;
};

/// Throws LayoutMismatch unless a.same_layout(b).
DiscrepancyReport discrepancy_report(const MeasurementSet& a, const MeasurementSet& b);
inline double discrepancy(const MeasurementSet& a, const MeasurementSet& b) { return discrepancy_report(a, b).sup; }

/// Each sample x becomes x (1 + level * N(0, 1)) from a seeded generator.
MeasurementSet add_noise(const MeasurementSet& m, double level, unsigned long long seed);

enum class MisfitNorm { kSup, kL2 };

struct InverseProblem {
  MeasurementSet observed;
  /// Forward model of a candidate inclusion; may throw GeometryError for
  /// infeasible shapes.
  std::function<MeasurementSet(const Inclusion&)> simulate;
  Inclusion::Kind kind = Inclusion::Kind::kCircle;
  std::vector<double> initial;
  double initial_step = 0.05;
  int max_forward_solves = 300;
  int restarts = 3;
  double tolerance = 1e-8;
  MisfitNorm norm = MisfitNorm::kL2;
  unsigned long long seed = 1;
  double noise_level = 0.0;
};

struct ReconstructionResult {
  Inclusion::Kind kind = Inclusion::Kind::kCircle;
  std::vector<double> parameters;
  double misfit = 0.0;
  std::vector<double> history;  ///< best misfit after every accepted simplex step
  int forward_solves = 0;
  int restarts_run = 0;
  bool stagnated = false;  ///< best misfit stayed above the tolerance floor
  unsigned long long seed = 0;
};

/// Nelder-Mead over the inclusion parameters, split evenly over seeded
/// restarts; later restarts start from the best point with a jittered,
/// halved simplex. Infeasible candidates receive a large penalty.
ReconstructionResult reconstruct_inclusion(const InverseProblem& ip);

struct CoefficientSample {
  Vec2 point;  ///< interface point
  std::size_t node = 0;
  double value = 0.0;
};

struct CoefficientOptions {
  int samples = 32;
  double offset_cells = 1.0;  ///< distance from the interface in units of h_max
  bool outside = true;
  double time_fraction = 0.5;  ///< use interior time levels with t >= fraction * T
  /// Other second-order coefficients of the same equation, assumed known
  /// and subtracted from the residual.
  std::map<MultiIndex, double> known;
};

/// Parabolic: the centred-time residual of the second-order field, divided
/// by the product of first-order factors (2 u_a u_b for mixed indices),
/// averaged over the selected time levels.
std::vector<CoefficientSample> recover_boundary_coefficient(const CascadeSetup& setup, const CascadeSolution& cascade,
                                                            const Inclusion& estimate, int component,
                                                            const MultiIndex& index, const CoefficientOptions& opt = {});

enum class ApexClass { kNonzero, kVanishing, kIdenticallyZero, kIndeterminate };
std::string apex_class_name(ApexClass c);

struct ApexTestResult {
  ApexClass classification = ApexClass::kIndeterminate;
  std::vector<double> tau;
  std::vector<Complex> integrals;
  std::vector<double> scaled;  ///< |I| tau^n
  double spread = 0.0;         ///< relative spread of `scaled` over the top half
  double exponent = 0.0;
  double extra_decay = 0.0;  ///< -exponent - n
  double constant = 0.0;     ///< mean of `scaled` over the top half
};

/// Classifies the residual's apex value from the tau-decay of its probe
/// integrals. `holder_alpha` is the expected extra decay of a residual that
/// vanishes at the apex; a fit within `decay_slack` of it counts.
ApexTestResult apex_vanishing_test(const ProbeSpec& spec, const std::function<double(const Eigen::VectorXd&)>& residual,
                                   double holder_alpha = 1.0, double decay_slack = 0.1, int jobs = 1);

}  // namespace anomalykit
