/// @file experiment.hpp
/// @brief Subcommand drivers and the acceptance suite.
#pragma once

#include "anomalykit/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace anomalykit {

struct RunOptions {
  std::filesystem::path out_dir;  ///< empty: ANOMALYKIT_OUT, then output.dir
  int jobs = 1;
  std::set<int> only;  ///< verify: criteria to run (empty = all)
  std::optional<std::filesystem::path> observed;  ///< invert: measurement file
};

/// Output directory for a command: the explicit option, else the
/// ANOMALYKIT_OUT environment variable, else cfg.output.dir; the command
/// name is appended.
std::filesystem::path resolve_output_dir(const Json& cfg, const RunOptions& opt, const std::string& command);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::filesystem::path dir;
  std::vector<ArtifactWriter::Entry> files;
  std::map<std::string, double> timings;
  Json summary = Json::object();
  std::vector<std::string> warnings;
  int exit_code = 0;

  Json to_json() const;
};

/// Writes manifest.json into m.dir. Called last by every driver.
void write_manifest(const RunManifest& m);

/// Builds the forward model from the config and simulates a candidate.
class ForwardModel {
 public:
  explicit ForwardModel(const Json& cfg);

  const Grid& grid() const { return grid_; }
  const ModelParams& params() const { return params_; }
  bool stationary() const { return stationary_; }
  const Inclusion& inclusion() const { return inclusion_; }

  /// Measurements for an inclusion with the configured reaction and data
  /// at data.forward_eps. Throws GeometryError for infeasible candidates.
  MeasurementSet simulate(const Inclusion& inc, State* final_state = nullptr) const;

 private:
  Json cfg_;
  Grid grid_{16, 16, Rect{}};
  ModelParams params_;
  BoundaryKind bc_ = BoundaryKind::kNeumann;
  bool stationary_ = false;
  Inclusion inclusion_ = Inclusion::circle({0.5, 0.5}, 0.0);
  State initial_;
  double dt_ = 0.0;
  int store_every_ = 1;
  NewtonOptions newton_;
};

RunManifest run_forward(const Json& cfg, const RunOptions& opt);
RunManifest run_linearize(const Json& cfg, const RunOptions& opt);
RunManifest run_probe(const Json& cfg, const RunOptions& opt);
RunManifest run_invert(const Json& cfg, const RunOptions& opt);
RunManifest run_verify(const Json& cfg, const RunOptions& opt);

/// Thresholds of the acceptance suite.
struct AcceptanceTolerances {
  double decay_2d = 0.05;
  double decay_3d = 0.1;
  double weighted_decay_2d = 0.08;
  double laplace_residual = 1e-10;
  double first_slope = 0.25;
  double second_slope = 0.3;
  double constant_state_per_step = 1e-12;
  int constant_state_steps = 1000;
  double mass_per_step = 1e-10;
  double min_value = -1e-8;
  double distinct_min = 1e-6;
  double identical_max = 1e-10;
  double shape_cells = 2.0;
  int shape_budget = 300;
  double coefficient_cells = 5.0;
  double coefficient_slope = 0.9;
  double runtime_cgo = 10.0;
  double runtime_weighted = 10.0;
  double runtime_laplace = 1.0;
  double runtime_norms = 5.0;
  double runtime_linearize = 120.0;
  double runtime_distinct = 60.0;
  double runtime_shape = 600.0;
  double runtime_coefficient = 600.0;
  double runtime_apex = 30.0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  Json data = Json::object();  ///< deterministic metrics (no timings)
  double seconds = 0.0;
};

struct AcceptanceRun {
  std::vector<CriterionResult> results;
  bool all_pass() const;
};

/// Runs the selected criteria (1..11) on the config. When `dir` is set,
/// each criterion's metrics are written to criteria/cNN.json there;
/// criterion 11 reruns the others into a scratch directory and compares
/// those files byte for byte.
AcceptanceRun run_acceptance(const Json& cfg, const AcceptanceTolerances& tol, const std::set<int>& only, int jobs,
                             const std::optional<std::filesystem::path>& dir = std::nullopt);

std::string criterion_name(int id);

}  // namespace anomalykit
