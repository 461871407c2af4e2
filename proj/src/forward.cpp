#include "anomalykit/forward.hpp"

#include "anomalykit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace anomalykit {

void ModelParams::validate() {
  if (chemicals < 1) throw ConfigError("model.chemicals must be at least 1");
  if (prey < 0) throw ConfigError("model.prey must be nonnegative");
  if (static_cast<int>(d.size()) != chemicals) throw ConfigError("model.d needs one entry per chemical");
  if (static_cast<int>(delta.size()) != prey) throw ConfigError("model.delta needs one entry per prey");
  for (double x : d)
    if (!(x > 0.0)) throw ConfigError("chemical diffusion coefficients must be positive");
  for (double x : delta)
    if (!(x > 0.0)) throw ConfigError("prey diffusion coefficients must be positive");
  const auto rows = static_cast<std::size_t>(chemicals);
  const auto cols = static_cast<std::size_t>(prey);
  if (cross.empty()) cross.assign(rows, std::vector<double>(cols, 0.0));
  if (taxis.empty()) taxis.assign(rows, std::vector<int>(cols, 0));
  if (cross.size() != rows || taxis.size() != rows) throw ConfigError("cross/taxis tables must be N x M");
  for (std::size_t i = 0; i < rows; ++i) {
    if (cross[i].size() != cols || taxis[i].size() != cols) throw ConfigError("cross/taxis tables must be N x M");
    for (double c : cross[i])
      if (!(c >= 0.0)) throw ConfigError("cross-diffusion coefficients must be nonnegative");
    for (int t : taxis[i])
      if (t != 0 && t != 1) throw ConfigError("taxis switches must be 0 or 1");
  }
  if (!(final_time > 0.0)) throw ConfigError("model.final_time must be positive");
}

bool ModelParams::has_taxis() const {
  for (const auto& row : taxis)
    for (int t : row)
      if (t) return true;
  return false;
}

bool ModelParams::has_cross() const {
  for (const auto& row : cross)
    for (double c : row)
      if (c != 0.0) return true;
  return false;
}

State State::constant(const Grid& g, const std::vector<double>& u0, int prey) {
  State s;
  for (double b : u0) s.u.emplace_back(g.size(), b);
  for (int j = 0; j < prey; ++j) s.v.emplace_back(g.size(), 0.0);
  return s;
}

void check_finite(const Grid& g, const State& s) {
  auto scan = [&](const std::vector<Field>& fields, const char* name) {
    for (std::size_t f = 0; f < fields.size(); ++f) {
      for (std::size_t k = 0; k < fields[f].size(); ++k) {
        if (!std::isfinite(fields[f][k])) {
          throw SolverError(std::string("non-finite value in ") + name + std::to_string(f + 1) + " at cell (" +
                            std::to_string(g.col(k)) + ", " + std::to_string(g.row(k)) + "), t = " +
                            std::to_string(s.time));
        }
      }
    }
  };
  scan(s.u, "u");
  scan(s.v, "v");
}

ParabolicStepper::ParabolicStepper(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, BoundaryKind bc,
                                   double dt)
    : g_(g), p_(p), r_(r), bc_(bc), dt_(dt), lap_(laplacian_matrix(g, bc)) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  for (int j = 0; j < p.prey; ++j) {
    auto solver = std::make_unique<SparseSolver>();
    solver->compute(implicit_diffusion_matrix(g, lap_, p.delta[static_cast<std::size_t>(j)], nullptr, dt));
    if (solver->info() != Eigen::Success) throw SolverError("prey diffusion factorization failed");
    prey_solvers_.push_back(std::move(solver));
  }
  chem_solvers_.resize(static_cast<std::size_t>(p.chemicals));
  chem_coeff_.resize(static_cast<std::size_t>(p.chemicals));
  chem_spd_.resize(static_cast<std::size_t>(p.chemicals));
  if (p.has_cross()) {
    const double cell = g.hx() * g.hy();
    weight_.resize(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) weight_[static_cast<Eigen::Index>(k)] = g.control_volume(k) / cell;
    stiffness_ = weight_.asDiagonal() * laplacian_matrix(g, BoundaryKind::kNeumann);
  }
}

void ParabolicStepper::solve_variable(std::size_t i, const Field& a, Field& rhs, Field& u) {
  const std::size_t n = g_.size();
  const bool dir = bc_ == BoundaryKind::kDirichlet;
  const double c = dt_ * p_.d[i];
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    if (!(a[k] > 0.0))
      throw SolverError("composite diffusion coefficient is not positive at cell (" + std::to_string(g_.col(k)) + ", " +
                        std::to_string(g_.row(k)) + ")");
    b[static_cast<Eigen::Index>(k)] = weight_[static_cast<Eigen::Index>(k)] * rhs[k];
  }
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(stiffness_.nonZeros()) + n);
  for (Eigen::Index col = 0; col < stiffness_.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(stiffness_, col); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      const auto q = static_cast<std::size_t>(it.col());
      const bool rb = dir && g_.is_boundary(r);
      const bool qb = dir && g_.is_boundary(q);
      if (rb) continue;
      if (qb) {
        // known boundary value a*u moves to the right-hand side
        b[it.row()] += c * it.value() * a[q] * rhs[q];
        continue;
      }
      t.emplace_back(it.row(), it.col(), -c * it.value());
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (dir && g_.is_boundary(k)) {
      t.emplace_back(kk, kk, 1.0);
      b[kk] = a[k] * rhs[k];
    } else {
      t.emplace_back(kk, kk, weight_[kk] / a[k]);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  auto& solver = chem_spd_[i];
  if (!solver) {
    solver = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>();
    solver->analyzePattern(m);
  }
  solver->factorize(m);
  if (solver->info() != Eigen::Success) throw SolverError("composite diffusion factorization failed");
  const Eigen::VectorXd w = solver->solve(b);
  for (std::size_t k = 0; k < n; ++k) u[k] = w[static_cast<Eigen::Index>(k)] / a[k];
}

double ParabolicStepper::stability_limit(const State& s) const {
  if (!p_.has_taxis()) return std::numeric_limits<double>::infinity();
  const double h = g_.h_min();
  std::vector<double> magnitude(static_cast<std::size_t>(p_.chemicals), 0.0);
  Field lap;
  for (int i = 0; i < p_.chemicals; ++i) {
    const Field& u = s.u[static_cast<std::size_t>(i)];
    apply_laplacian(g_, u, lap, BoundaryKind::kNeumann);
    double m = 0.0;
    for (int jj = 0; jj < g_.ny(); ++jj) {
      for (int ii = 0; ii < g_.nx(); ++ii) {
        const int ia = std::max(ii - 1, 0), ib = std::min(ii + 1, g_.nx() - 1);
        const int ja = std::max(jj - 1, 0), jb = std::min(jj + 1, g_.ny() - 1);
        const double gx = (u[g_.index(ib, jj)] - u[g_.index(ia, jj)]) / ((ib - ia) * g_.hx());
        const double gy = (u[g_.index(ii, jb)] - u[g_.index(ii, ja)]) / ((jb - ja) * g_.hy());
        m = std::max(m, h * std::hypot(gx, gy) + h * h * std::abs(lap[g_.index(ii, jj)]));
      }
    }
    magnitude[static_cast<std::size_t>(i)] = m;
  }
  double worst = 0.0;
  for (int j = 0; j < p_.prey; ++j) {
    double sum = 0.0;
    for (int i = 0; i < p_.chemicals; ++i)
      if (p_.taxis[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) sum += magnitude[static_cast<std::size_t>(i)];
    worst = std::max(worst, sum);
  }
  if (worst == 0.0) return std::numeric_limits<double>::infinity();
  return 0.2 * h * h / worst;
}

void ParabolicStepper::step(State& s) {
  const std::size_t n = g_.size();
  const int nc = p_.chemicals;
  const int np = p_.prey;
  const double limit = stability_limit(s);
  if (dt_ > limit) {
    throw ConfigError("dt = " + std::to_string(dt_) + " exceeds the explicit taxis limit " + std::to_string(limit) +
                      " at t = " + std::to_string(s.time));
  }
  const bool dir = bc_ == BoundaryKind::kDirichlet;

  // explicit prey right-hand sides
  std::vector<Field> rhs_v(static_cast<std::size_t>(np));
  for (int j = 0; j < np; ++j) {
    Field& rhs = rhs_v[static_cast<std::size_t>(j)];
    rhs = s.v[static_cast<std::size_t>(j)];
    for (int i = 0; i < nc; ++i) {
      if (p_.taxis[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
        add_taxis(g_, s.v[static_cast<std::size_t>(j)], s.u[static_cast<std::size_t>(i)], dt_, rhs, bc_);
    }
  }

  // explicit chemical right-hand sides
  std::vector<Field> rhs_u(static_cast<std::size_t>(nc));
  for (int i = 0; i < nc; ++i) rhs_u[static_cast<std::size_t>(i)] = s.u[static_cast<std::size_t>(i)];
  if (!r_.empty()) {
    std::vector<double> w(static_cast<std::size_t>(nc + np));
    for (std::size_t k = 0; k < n; ++k) {
      if (dir && g_.is_boundary(k)) continue;
      for (int i = 0; i < nc; ++i) w[static_cast<std::size_t>(i)] = s.u[static_cast<std::size_t>(i)][k];
      for (int j = 0; j < np; ++j) w[static_cast<std::size_t>(nc + j)] = s.v[static_cast<std::size_t>(j)][k];
      for (int i = 0; i < nc; ++i) rhs_u[static_cast<std::size_t>(i)][k] += dt_ * r_.eval(i, k, s.time, w.data());
    }
  }

  for (int i = 0; i < nc; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    Field a;
    bool uniform = true;
    if (p_.has_cross()) {
      a.assign(n, 1.0);
      for (int j = 0; j < np; ++j) {
        const double c = p_.cross[ii][static_cast<std::size_t>(j)];
        if (c == 0.0) continue;
        for (std::size_t k = 0; k < n; ++k) a[k] += c * s.v[static_cast<std::size_t>(j)][k];
      }
      uniform = std::all_of(a.begin(), a.end(), [](double x) { return x == 1.0; });
    }
    if (!uniform) {
      solve_variable(ii, a, rhs_u[ii], s.u[ii]);
      continue;
    }
    a.clear();
    if (!chem_solvers_[ii] || a != chem_coeff_[ii]) {
      const SparseMatrix m = implicit_diffusion_matrix(g_, lap_, p_.d[ii], a.empty() ? nullptr : &a, dt_);
      // the sparsity pattern never changes, so the ordering is computed once
      if (!chem_solvers_[ii]) {
        chem_solvers_[ii] = std::make_unique<SparseSolver>();
        chem_solvers_[ii]->analyzePattern(m);
      }
      chem_solvers_[ii]->factorize(m);
      if (chem_solvers_[ii]->info() != Eigen::Success) throw SolverError("chemical diffusion factorization failed");
      chem_coeff_[ii] = std::move(a);
    }
    const Eigen::Map<const Eigen::VectorXd> b(rhs_u[ii].data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x = chem_solvers_[ii]->solve(b);
    if (chem_solvers_[ii]->info() != Eigen::Success) throw SolverError("chemical diffusion solve failed");
    std::copy(x.data(), x.data() + n, s.u[ii].begin());
  }
  for (int j = 0; j < np; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const Eigen::Map<const Eigen::VectorXd> b(rhs_v[jj].data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x = prey_solvers_[jj]->solve(b);
    if (prey_solvers_[jj]->info() != Eigen::Success) throw SolverError("prey diffusion solve failed");
    std::copy(x.data(), x.data() + n, s.v[jj].begin());
  }
  s.time += dt_;
  check_finite(g_, s);
}

State step_parabolic(const State& s, const Grid& g, const ModelParams& p, const ReactionOnGrid& r, BoundaryKind bc,
                     double dt) {
  check_finite(g, s);
  ParabolicStepper stepper(g, p, r, bc, dt);
  State out = s;
  stepper.step(out);
  return out;
}

bool MeasurementSet::same_layout(const MeasurementSet& o) const {
  if (kind != o.kind || nx != o.nx || ny != o.ny || !(bounds == o.bounds) || chemicals != o.chemicals ||
      prey != o.prey)
    return false;
  if (times.size() != o.times.size() || traces.size() != o.traces.size()) return false;
  for (std::size_t t = 0; t < times.size(); ++t)
    if (times[t] != o.times[t]) return false;
  if (snapshot.size() != o.snapshot.size() || neumann.size() != o.neumann.size()) return false;
  return true;
}

MeasurementSet extract_measurements(const Trajectory& tr, const Grid& g) {
  if (tr.states.empty()) throw ConfigError("cannot extract measurements from an empty trajectory");
  MeasurementSet m;
  m.kind = MeasurementSet::Kind::kParabolic;
  m.nx = g.nx();
  m.ny = g.ny();
  m.bounds = g.bounds();
  m.chemicals = static_cast<int>(tr.states.front().u.size());
  m.prey = static_cast<int>(tr.states.front().v.size());
  const auto& nodes = g.boundary_nodes();
  for (const State& s : tr.states) {
    m.times.push_back(s.time);
    std::vector<Field> row;
    auto take = [&](const Field& f) {
      Field t(nodes.size());
      for (std::size_t b = 0; b < nodes.size(); ++b) t[b] = f[nodes[b]];
      row.push_back(std::move(t));
    };
    for (const auto& f : s.u) take(f);
    for (const auto& f : s.v) take(f);
    m.traces.push_back(std::move(row));
  }
  const State& last = tr.states.back();
  for (const auto& f : last.u) m.snapshot.push_back(f);
  for (const auto& f : last.v) m.snapshot.push_back(f);
  return m;
}

MeasurementSet extract_measurements(const State& s, const Grid& g) {
  MeasurementSet m;
  m.kind = MeasurementSet::Kind::kStationary;
  m.nx = g.nx();
  m.ny = g.ny();
  m.bounds = g.bounds();
  m.chemicals = static_cast<int>(s.u.size());
  m.prey = static_cast<int>(s.v.size());
  for (const auto& f : s.u) m.neumann.push_back(neumann_trace(g, f));
  for (const auto& f : s.v) m.neumann.push_back(neumann_trace(g, f));
  return m;
}

TimeDependentResult solve_time_dependent(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, const State& init,
                                         BoundaryKind bc, double dt, int store_every, bool keep_trajectory) {
  if (!(p.final_time > 0.0)) throw ConfigError("final time must be positive");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (store_every < 1) throw ConfigError("store_every must be at least 1");
  const long long steps = std::llround(p.final_time / dt);
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - p.final_time) > 1e-9 * std::max(1.0, p.final_time))
    throw ConfigError("final time must be a whole number of time steps");
  if (static_cast<int>(init.u.size()) != p.chemicals || static_cast<int>(init.v.size()) != p.prey)
    throw ConfigError("initial state does not match the model sizes");
  check_finite(g, init);

  TimeDependentResult res;
  res.trajectory.dt = dt;
  res.trajectory.store_every = store_every;
  ParabolicStepper stepper(g, p, r, bc, dt);
  State s = init;
  double lo = std::numeric_limits<double>::infinity();
  auto monitor = [&lo](const State& st) {
    for (const auto& f : st.u)
      for (double x : f) lo = std::min(lo, x);
    for (const auto& f : st.v)
      for (double x : f) lo = std::min(lo, x);
  };
  monitor(s);
  Trajectory stored;
  stored.dt = dt;
  stored.store_every = store_every;
  for (long long n = 1; n <= steps; ++n) {
    stepper.step(s);
    s.time = static_cast<double>(n) * dt;
    monitor(s);
    if (n % store_every == 0 || n == steps) stored.states.push_back(s);
  }
  res.measurements = extract_measurements(stored, g);
  res.min_value = lo;
  res.steps = static_cast<int>(steps);
  if (keep_trajectory) res.trajectory = std::move(stored);
  return res;
}

Eigen::VectorXd pack_state(const State& s) {
  std::size_t total = 0;
  for (const auto& f : s.u) total += f.size();
  for (const auto& f : s.v) total += f.size();
  Eigen::VectorXd x(static_cast<Eigen::Index>(total));
  Eigen::Index o = 0;
  for (const auto& f : s.u)
    for (double val : f) x(o++) = val;
  for (const auto& f : s.v)
    for (double val : f) x(o++) = val;
  return x;
}

State unpack_state(const Eigen::VectorXd& x, std::size_t n, int chemicals, int prey) {
  State s;
  Eigen::Index o = 0;
  for (int i = 0; i < chemicals; ++i, o += static_cast<Eigen::Index>(n))
    s.u.emplace_back(x.data() + o, x.data() + o + static_cast<Eigen::Index>(n));
  for (int j = 0; j < prey; ++j, o += static_cast<Eigen::Index>(n))
    s.v.emplace_back(x.data() + o, x.data() + o + static_cast<Eigen::Index>(n));
  return s;
}

Eigen::VectorXd stationary_residual(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, const State& dirichlet,
                                    const Eigen::VectorXd& x) {
  const std::size_t n = g.size();
  const int nc = p.chemicals;
  const int np = p.prey;
  const State s = unpack_state(x, n, nc, np);
  const double scale = g.h_min() * g.h_min();
  Eigen::VectorXd res(x.size());
  Field lap, comp;
  std::vector<double> w(static_cast<std::size_t>(nc + np));
  Eigen::Index o = 0;
  for (int i = 0; i < nc; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    comp = s.u[ii];
    for (int j = 0; j < np; ++j) {
      const double c = p.cross[ii][static_cast<std::size_t>(j)];
      if (c == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) comp[k] += c * s.u[ii][k] * s.v[static_cast<std::size_t>(j)][k];
    }
    apply_laplacian(g, comp, lap, BoundaryKind::kDirichlet);
    for (std::size_t k = 0; k < n; ++k, ++o) {
      if (g.is_boundary(k)) {
        res(o) = s.u[ii][k] - dirichlet.u[ii][k];
        continue;
      }
      double f = 0.0;
      if (!r.empty()) {
        for (int a = 0; a < nc; ++a) w[static_cast<std::size_t>(a)] = s.u[static_cast<std::size_t>(a)][k];
        for (int b = 0; b < np; ++b) w[static_cast<std::size_t>(nc + b)] = s.v[static_cast<std::size_t>(b)][k];
        f = r.eval(i, k, 0.0, w.data());
      }
      res(o) = scale * (-p.d[ii] * lap[k] - f);
    }
  }
  for (int j = 0; j < np; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    apply_laplacian(g, s.v[jj], lap, BoundaryKind::kDirichlet);
    Field drift(n, 0.0);
    for (int i = 0; i < nc; ++i)
      if (p.taxis[static_cast<std::size_t>(i)][jj]) add_taxis(g, s.v[jj], s.u[static_cast<std::size_t>(i)], 1.0, drift, BoundaryKind::kDirichlet);
    for (std::size_t k = 0; k < n; ++k, ++o) {
      if (g.is_boundary(k)) {
        res(o) = s.v[jj][k] - dirichlet.v[jj][k];
        continue;
      }
      res(o) = scale * (-p.delta[jj] * lap[k] - drift[k]);
    }
  }
  return res;
}

StationaryResult solve_stationary(const Grid& g, const ModelParams& p, const ReactionOnGrid& r, const State& dirichlet,
                                  const NewtonOptions& opt) {
  const std::size_t n = g.size();
  const int nc = p.chemicals;
  const int np = p.prey;
  if (static_cast<int>(dirichlet.u.size()) != nc || static_cast<int>(dirichlet.v.size()) != np)
    throw ConfigError("Dirichlet data do not match the model sizes");
  check_finite(g, dirichlet);

  // block-diagonal preconditioner: the linear diffusion part of each field
  const double scale = g.h_min() * g.h_min();
  const SparseMatrix lap = laplacian_matrix(g, BoundaryKind::kDirichlet);
  SparseMatrix boundary_id(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  {
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t k : g.boundary_nodes()) t.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
    boundary_id.setFromTriplets(t.begin(), t.end());
  }
  std::vector<std::unique_ptr<SparseSolver>> blocks;
  auto add_block = [&](double diff) {
    SparseMatrix m = (-scale * diff) * lap + boundary_id;
    m.makeCompressed();
    auto solver = std::make_unique<SparseSolver>();
    solver->compute(m);
    if (solver->info() != Eigen::Success) throw SolverError("singular Jacobian signal: preconditioner factorization failed");
    blocks.push_back(std::move(solver));
  };
  for (double d : p.d) add_block(d);
  for (double d : p.delta) add_block(d);
  const auto nn = static_cast<Eigen::Index>(n);
  auto precondition = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    out.resize(in.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Eigen::Index o = static_cast<Eigen::Index>(b) * nn;
      out.segment(o, nn) = blocks[b]->solve(in.segment(o, nn));
    }
  };

  Eigen::VectorXd x = pack_state(dirichlet);
  auto residual = [&](const Eigen::VectorXd& y) { return stationary_residual(g, p, r, dirichlet, y); };
  Eigen::VectorXd res = residual(x);
  double rnorm = res.lpNorm<Eigen::Infinity>();
  StationaryResult out;
  int it = 0;
  for (; it < opt.max_iterations && !(rnorm < opt.tolerance); ++it) {
    if (!std::isfinite(rnorm)) throw SolverError("Newton residual became non-finite");
    const double xnorm = x.lpNorm<Eigen::Infinity>();
    auto jv = [&](const Eigen::VectorXd& pv, Eigen::VectorXd& outv) {
      const double pn = pv.lpNorm<Eigen::Infinity>();
      if (pn == 0.0) {
        outv = Eigen::VectorXd::Zero(pv.size());
        return;
      }
      const double sigma = 1e-7 * (1.0 + xnorm) / pn;
      outv = (residual(x + sigma * pv) - res) / sigma;
    };
    Eigen::VectorXd step = Eigen::VectorXd::Zero(x.size());
    const Eigen::VectorXd rhs = -res;
    gmres(jv, precondition, rhs, step, opt.restart, 10 * opt.restart, 1e-8);

    double lambda = 1.0;
    Eigen::VectorXd trial = x + step;
    Eigen::VectorXd trial_res = residual(trial);
    double trial_norm = trial_res.lpNorm<Eigen::Infinity>();
    for (int hv = 0; hv < opt.max_halvings && !(trial_norm < rnorm); ++hv) {
      lambda *= 0.5;
      trial = x + lambda * step;
      trial_res = residual(trial);
      trial_norm = trial_res.lpNorm<Eigen::Infinity>();
    }
    if (!(trial_norm < rnorm) && rnorm < 1e3 * opt.tolerance) {
      // stagnated at round-off level just above the tolerance
      break;
    }
    x = std::move(trial);
    res = std::move(trial_res);
    rnorm = trial_norm;
  }
  if (!(rnorm < opt.tolerance)) {
    throw SolverError("Newton iteration did not converge after " + std::to_string(it) +
                      " iterations, last residual " + std::to_string(rnorm));
  }
  out.state = unpack_state(x, n, nc, np);
  out.measurements = extract_measurements(out.state, g);
  out.iterations = it;
  out.residual = rnorm;
  return out;
}

}  // namespace anomalykit
