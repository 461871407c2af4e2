/// @file forward.hpp
/// @brief Time-dependent and stationary predator-prey chemotaxis solvers
/// and the boundary measurements they produce.
#pragma once

#include "anomalykit/operators.hpp"
#include "anomalykit/reaction.hpp"

#include <memory>
#include <vector>

namespace anomalykit {

struct ModelParams {
  int chemicals = 1;
  int prey = 0;
  std::vector<double> d;                   ///< chemical diffusion, length N
  std::vector<double> delta;               ///< prey diffusion, length M
  std::vector<std::vector<double>> cross;  ///< cross-diffusion [i][j], N x M
  std::vector<std::vector<int>> taxis;     ///< switch [i][j]: chemical i steers prey j
  double final_time = 0.1;

  /// Fills missing cross/taxis tables with zeros, then checks sizes and signs.
  void validate();
  bool has_taxis() const;
  bool has_cross() const;
};

struct State {
  double time = 0.0;
  std::vector<Field> u;
  std::vector<Field> v;

  static State constant(const Grid& g, const std::vector<double>& u0, int prey);
  bool operator==(const State&) const = default;
};

/// One IMEX step. Implicit: composite diffusion with the coefficient
/// 1 + sum_j cross_ij v_j frozen at the old level, prey diffusion.
/// Explicit: taxis and reaction. Dirichlet mode holds boundary nodes fixed.
class ParabolicStepper {
 public:
  ParabolicStepper(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, BoundaryKind bc, double dt);

  /// 0.2 h_min^2 / max_j sum_i chi_ij (h |grad u_i| + h^2 |lap u_i|); infinite without taxis.
  double stability_limit(const State& s) const;

  /// Throws ConfigError if dt exceeds the limit, SolverError on non-finite values.
  void step(State& s);

  double dt() const { return dt_; }

 private:
  const Grid& g_;
  const ModelParams& p_;
  const ReactionOnGrid& r_;
  BoundaryKind bc_;
  double dt_;
  SparseMatrix lap_;
  std::vector<std::unique_ptr<SparseSolver>> prey_solvers_;
  std::vector<std::unique_ptr<SparseSolver>> chem_solvers_;
  std::vector<Field> chem_coeff_;
  // variable coefficient a: solve for a*u with the symmetric form
  // diag(V/a) - dt d S, S = V L (V the control-volume weights)
  void solve_variable(std::size_t i, const Field& a, Field& rhs, Field& u);
  SparseMatrix stiffness_;
  Eigen::VectorXd weight_;
  std::vector<std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>>> chem_spd_;
};

State step_parabolic(const State& s, const Grid& g, const ModelParams& p, const ReactionOnGrid& r, BoundaryKind bc,
                     double dt);

/// Throws SolverError naming the first non-finite field entry.
void check_finite(const Grid& g, const State& s);

struct MeasurementSet {
  enum class Kind { kParabolic, kStationary };
  Kind kind = Kind::kParabolic;
  int nx = 0;
  int ny = 0;
  Rect bounds;
  int chemicals = 0;
  int prey = 0;
  std::vector<double> times;               ///< parabolic: strictly increasing
  std::vector<std::vector<Field>> traces;  ///< [time][field] over boundary nodes
  std::vector<Field> snapshot;             ///< [field] full grid at final time
  std::vector<Field> neumann;              ///< stationary: [field] over boundary nodes

  int field_count() const { return chemicals + prey; }
  bool same_layout(const MeasurementSet& o) const;
  bool operator==(const MeasurementSet&) const = default;
};

/// Stored states of a parabolic run: every `store_every` steps plus the last.
struct Trajectory {
  double dt = 0.0;
  int store_every = 1;
  std::vector<State> states;
};

MeasurementSet extract_measurements(const Trajectory& tr, const Grid& g);
/// Stationary variant: Neumann traces of every field.
MeasurementSet extract_measurements(const State& s, const Grid& g);

struct TimeDependentResult {
  Trajectory trajectory;  ///< empty states unless requested
  MeasurementSet measurements;
  double min_value = 0.0;  ///< smallest field value seen over the run
  int steps = 0;
};

/// Integrates to p.final_time, which must be a whole number of dt steps.
TimeDependentResult solve_time_dependent(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, const State& init,
                                         BoundaryKind bc, double dt, int store_every, bool keep_trajectory = false);

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
  int restart = 30;
  int max_halvings = 8;
};

struct StationaryResult {
  State state;
  MeasurementSet measurements;
  int iterations = 0;
  double residual = 0.0;
};

/// Residual of the stationary system. Interior rows are multiplied by
/// h_min^2; boundary rows hold field minus Dirichlet data.
Eigen::VectorXd stationary_residual(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, const State& dirichlet,
                                    const Eigen::VectorXd& x);

/// Damped Jacobian-free Newton-Krylov. Dirichlet data are read from the
/// boundary entries of `dirichlet`; interior entries seed the iteration.
StationaryResult solve_stationary(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, const State& dirichlet,
                                  const NewtonOptions& opt = {});

Eigen::VectorXd pack_state(const State& s);
State unpack_state(const Eigen::VectorXd& x, std::size_t n, int chemicals, int prey);

}  // namespace anomalykit
