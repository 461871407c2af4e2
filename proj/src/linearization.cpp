#include "anomalykit/linearization.hpp"

#include "anomalykit/error.hpp"
#include "anomalykit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anomalykit {
namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

const Field* pick(const std::vector<Field>& list, int i) {
  return list.empty() ? nullptr : &list[static_cast<std::size_t>(i)];
}

State zero_state(const Grid& g, int chemicals, int prey) {
  State s;
  s.u.assign(static_cast<std::size_t>(chemicals), Field(g.size(), 0.0));
  s.v.assign(static_cast<std::size_t>(prey), Field(g.size(), 0.0));
  return s;
}

/// Dirichlet solve matrix: -L on interior rows, identity on boundary rows.
SparseMatrix dirichlet_operator(const Grid& g) {
  SparseMatrix lap = laplacian_matrix(g, BoundaryKind::kDirichlet);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k : g.boundary_nodes()) t.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
  SparseMatrix id(lap.rows(), lap.cols());
  id.setFromTriplets(t.begin(), t.end());
  SparseMatrix m = -lap + id;
  m.makeCompressed();
  return m;
}

/// Lower-order values of every variable at one node, laid out for
/// ReactionOnGrid::series_derivative.
void gather_series(const std::vector<const State*>& lower, std::size_t k, int nc, int np, int l,
                   std::vector<std::vector<double>>& series) {
  series.assign(static_cast<std::size_t>(nc + np), std::vector<double>(static_cast<std::size_t>(l), 0.0));
  for (std::size_t o = 0; o < lower.size(); ++o) {
    for (int i = 0; i < nc; ++i) series[static_cast<std::size_t>(i)][o] = lower[o]->u[static_cast<std::size_t>(i)][k];
    for (int j = 0; j < np; ++j) series[static_cast<std::size_t>(nc + j)][o] = lower[o]->v[static_cast<std::size_t>(j)][k];
  }
}

}  // namespace

void DataFamily::validate(const Grid& g, int chemicals, int prey) const {
  if (static_cast<int>(base.size()) != chemicals) throw ConfigError("data.base needs one entry per chemical");
  auto check = [&](const std::vector<Field>& list, int count, const char* name) {
    if (list.empty()) return;
    if (static_cast<int>(list.size()) != count) throw ConfigError(std::string("data.") + name + " has the wrong field count");
    for (const auto& f : list)
      if (f.size() != g.size()) throw ConfigError(std::string("data.") + name + " does not match the grid");
  };
  check(f1, chemicals, "f1");
  check(f2, chemicals, "f2");
  check(g1, prey, "g1");
  check(g2, prey, "g2");
  for (int i = 0; i < chemicals && !f1.empty(); ++i) {
    if (base[static_cast<std::size_t>(i)] != 0.0) continue;
    for (double x : f1[static_cast<std::size_t>(i)])
      if (x < 0.0) throw ConfigError("f1 must be nonnegative where the base state is zero");
  }
  for (const auto& f : g1)
    for (double x : f)
      if (x < 0.0) throw ConfigError("g1 must be nonnegative (prey base state is zero)");
  if (ladder.size() < 4) throw ConfigError("epsilon ladder needs at least 4 entries");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0)) throw ConfigError("epsilon ladder entries must be positive");
    if (k > 0 && !(ladder[k] < ladder[k - 1])) throw ConfigError("epsilon ladder must be strictly decreasing");
  }
}

State DataFamily::at(double eps, const Grid& g, int chemicals, int prey) const {
  State s = State::constant(g, base, prey);
  const double half = 0.5 * eps * eps;
  for (int i = 0; i < chemicals; ++i) {
    const Field* a = pick(f1, i);
    const Field* b = pick(f2, i);
    Field& u = s.u[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (a) u[k] += eps * (*a)[k];
      if (b) u[k] += half * (*b)[k];
    }
  }
  for (int j = 0; j < prey; ++j) {
    const Field* a = pick(g1, j);
    const Field* b = pick(g2, j);
    Field& v = s.v[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (a) v[k] += eps * (*a)[k];
      if (b) v[k] += half * (*b)[k];
    }
  }
  return s;
}

State DataFamily::derivative(int l, const Grid& g, int chemicals, int prey) const {
  State s = zero_state(g, chemicals, prey);
  if (l == 1 || l == 2) {
    const auto& fu = l == 1 ? f1 : f2;
    const auto& fv = l == 1 ? g1 : g2;
    for (int i = 0; i < chemicals; ++i)
      if (const Field* a = pick(fu, i)) s.u[static_cast<std::size_t>(i)] = *a;
    for (int j = 0; j < prey; ++j)
      if (const Field* a = pick(fv, j)) s.v[static_cast<std::size_t>(j)] = *a;
  }
  return s;
}

namespace {

CascadeSolution march_parabolic(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& lower, int l) {
  const Grid& g = s.grid;
  const ModelParams& p = s.params;
  const int nc = p.chemicals;
  const int np = p.prey;
  const std::size_t n = g.size();
  const long long steps = std::llround(p.final_time / s.dt);
  if (steps < 1 || std::abs(static_cast<double>(steps) * s.dt - p.final_time) > 1e-9 * std::max(1.0, p.final_time))
    throw ConfigError("final time must be a whole number of time steps");
  const bool dir = s.bc == BoundaryKind::kDirichlet;

  const SparseMatrix lap = laplacian_matrix(g, s.bc);
  std::vector<std::unique_ptr<SparseSolver>> chem(static_cast<std::size_t>(nc));
  std::vector<std::unique_ptr<SparseSolver>> prey(static_cast<std::size_t>(np));
  for (int i = 0; i < nc; ++i) {
    chem[static_cast<std::size_t>(i)] = std::make_unique<SparseSolver>();
    chem[static_cast<std::size_t>(i)]->compute(implicit_diffusion_matrix(g, lap, p.d[static_cast<std::size_t>(i)], nullptr, s.dt));
  }
  for (int j = 0; j < np; ++j) {
    prey[static_cast<std::size_t>(j)] = std::make_unique<SparseSolver>();
    prey[static_cast<std::size_t>(j)]->compute(implicit_diffusion_matrix(g, lap, p.delta[static_cast<std::size_t>(j)], nullptr, s.dt));
  }

  CascadeSolution out = lower;
  out.stationary = false;
  out.dt = s.dt;
  std::vector<State> level;
  level.reserve(static_cast<std::size_t>(steps + 1));
  State cur = fam.derivative(l, g, nc, np);
  cur.time = 0.0;
  level.push_back(cur);

  auto lower_at = [&](int k, long long t) -> const State& {
    return lower.orders[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(t)];
  };
  std::vector<std::vector<double>> series;
  std::vector<const State*> ptrs;
  Field tmp, composite;

  for (long long t = 0; t < steps; ++t) {
    const double time = static_cast<double>(t) * s.dt;
    State next = zero_state(g, nc, np);

    for (int j = 0; j < np; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      Field rhs = cur.v[jj];
      for (int i = 0; i < nc; ++i) {
        if (!p.taxis[static_cast<std::size_t>(i)][jj]) continue;
        for (int k = 1; k <= l - 1; ++k) {
          add_taxis(g, lower_at(k, t).v[jj], lower_at(l - k, t).u[static_cast<std::size_t>(i)],
                    s.dt * binomial(l, k), rhs, s.bc);
        }
      }
      const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n));
      const Eigen::VectorXd x = prey[jj]->solve(b);
      std::copy(x.data(), x.data() + n, next.v[jj].begin());
    }

    ptrs.clear();
    for (int k = 1; k < l; ++k) ptrs.push_back(&lower_at(k, t));
    for (int i = 0; i < nc; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      Field rhs = cur.u[ii];
      if (l >= 2 && !s.reaction.empty()) {
        for (std::size_t k = 0; k < n; ++k) {
          if (dir && g.is_boundary(k)) continue;
          gather_series(ptrs, k, nc, np, l, series);
          rhs[k] += s.dt * s.reaction.series_derivative(i, k, time, series, l);
        }
      }
      // Leibniz terms of L(a u) with a = 1 + sum_j cross_ij v_j
      if (p.has_cross()) {
        composite.assign(n, 0.0);
        bool any = false;
        for (int k = 1; k <= l; ++k) {
          const State& vk = k == l ? cur : lower_at(k, t);
          for (int j = 0; j < np; ++j) {
            const double c = p.cross[ii][static_cast<std::size_t>(j)];
            if (c == 0.0) continue;
            any = true;
            const double w = c * binomial(l, k);
            const Field& vf = vk.v[static_cast<std::size_t>(j)];
            if (k == l) {
              const double u0 = fam.base[ii];
              for (std::size_t q = 0; q < n; ++q) composite[q] += w * vf[q] * u0;
            } else {
              const Field& uf = lower_at(l - k, t + 1).u[ii];
              for (std::size_t q = 0; q < n; ++q) composite[q] += w * vf[q] * uf[q];
            }
          }
        }
        if (any) {
          apply_laplacian(g, composite, tmp, s.bc);
          const double scale = s.dt * p.d[ii];
          for (std::size_t q = 0; q < n; ++q) rhs[q] += scale * tmp[q];
        }
      }
      const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n));
      const Eigen::VectorXd x = chem[ii]->solve(b);
      std::copy(x.data(), x.data() + n, next.u[ii].begin());
    }
    next.time = static_cast<double>(t + 1) * s.dt;
    check_finite(g, next);
    level.push_back(next);
    cur = std::move(next);
  }
  out.orders.push_back(std::move(level));
  return out;
}

CascadeSolution solve_stationary_order(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& lower,
                                       int l) {
  const Grid& g = s.grid;
  const ModelParams& p = s.params;
  const int nc = p.chemicals;
  const int np = p.prey;
  const std::size_t n = g.size();
  SparseSolver solver;
  solver.compute(dirichlet_operator(g));
  if (solver.info() != Eigen::Success) throw SolverError("singular Jacobian signal in the cascade operator");

  const State data = fam.derivative(l, g, nc, np);
  State out_state = zero_state(g, nc, np);
  auto lower_of = [&](int k) -> const State& { return lower.orders[static_cast<std::size_t>(k - 1)].front(); };
  Field tmp, composite;

  for (int j = 0; j < np; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    Field rhs(n, 0.0);
    for (int i = 0; i < nc; ++i) {
      if (!p.taxis[static_cast<std::size_t>(i)][jj]) continue;
      for (int k = 1; k <= l - 1; ++k)
        add_taxis(g, lower_of(k).v[jj], lower_of(l - k).u[static_cast<std::size_t>(i)], binomial(l, k), rhs,
                  BoundaryKind::kDirichlet);
    }
    for (std::size_t q = 0; q < n; ++q) rhs[q] = g.is_boundary(q) ? data.v[jj][q] : rhs[q] / p.delta[jj];
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x = solver.solve(b);
    std::copy(x.data(), x.data() + n, out_state.v[jj].begin());
  }

  std::vector<const State*> ptrs;
  for (int k = 1; k < l; ++k) ptrs.push_back(&lower_of(k));
  std::vector<std::vector<double>> series;
  for (int i = 0; i < nc; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    Field rhs(n, 0.0);
    if (l >= 2 && !s.reaction.empty()) {
      for (std::size_t k = 0; k < n; ++k) {
        if (g.is_boundary(k)) continue;
        gather_series(ptrs, k, nc, np, l, series);
        rhs[k] = s.reaction.series_derivative(i, k, 0.0, series, l);
      }
    }
    if (p.has_cross()) {
      composite.assign(n, 0.0);
      for (int k = 1; k <= l; ++k) {
        const State& vk = k == l ? out_state : lower_of(k);
        for (int j = 0; j < np; ++j) {
          const double c = p.cross[ii][static_cast<std::size_t>(j)];
          if (c == 0.0) continue;
          const double w = c * binomial(l, k);
          const Field& vf = vk.v[static_cast<std::size_t>(j)];
          for (std::size_t q = 0; q < n; ++q)
            composite[q] += w * vf[q] * (k == l ? fam.base[ii] : lower_of(l - k).u[ii][q]);
        }
      }
      apply_laplacian(g, composite, tmp, BoundaryKind::kDirichlet);
      for (std::size_t q = 0; q < n; ++q) rhs[q] += p.d[ii] * tmp[q];
    }
    for (std::size_t q = 0; q < n; ++q) rhs[q] = g.is_boundary(q) ? data.u[ii][q] : rhs[q] / p.d[ii];
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x = solver.solve(b);
    std::copy(x.data(), x.data() + n, out_state.u[ii].begin());
  }
  check_finite(g, out_state);
  CascadeSolution out = lower;
  out.stationary = true;
  out.dt = 0.0;
  out.orders.push_back({out_state});
  return out;
}

}  // namespace

CascadeSolution solve_next_order(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& lower) {
  const int l = lower.max_order() + 1;
  if (l > 3) throw ConfigError("the cascade stops at third order");
  if (l >= 2 && lower.stationary != s.stationary) throw ConfigError("lower orders come from a different solver mode");
  fam.validate(s.grid, s.params.chemicals, s.params.prey);
  if (static_cast<int>(s.reaction.base().size()) == s.params.chemicals && s.reaction.base() != fam.base)
    throw ConfigError("data family base state differs from the reaction base state");
  return s.stationary ? solve_stationary_order(s, fam, lower, l) : march_parabolic(s, fam, lower, l);
}

CascadeSolution solve_first_order(const CascadeSetup& s, const DataFamily& fam) {
  CascadeSolution empty;
  empty.stationary = s.stationary;
  return solve_next_order(s, fam, empty);
}

CascadeSolution solve_second_order(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& first) {
  if (first.max_order() != 1) throw ConfigError("second order needs exactly the first-order solution");
  return solve_next_order(s, fam, first);
}

CascadeSolution solve_cascade(const CascadeSetup& s, const DataFamily& fam, int max_order) {
  if (max_order < 1 || max_order > 3) throw ConfigError("cascade order must lie in [1, 3]");
  CascadeSolution sol = solve_first_order(s, fam);
  while (sol.max_order() < max_order) sol = solve_next_order(s, fam, sol);
  return sol;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ConvergenceReport finite_difference_check(const CascadeSetup& s, const DataFamily& fam, const CascadeSolution& cascade,
                                          int jobs) {
  if (cascade.max_order() < 2) throw ConfigError("finite-difference check needs the second-order cascade");
  fam.validate(s.grid, s.params.chemicals, s.params.prey);
  const Grid& g = s.grid;
  const int nc = s.params.chemicals;
  const int np = s.params.prey;

  // nonlinear solutions at eps = 0 and along the ladder, as lists of states
  std::vector<double> eps{0.0};
  eps.insert(eps.end(), fam.ladder.begin(), fam.ladder.end());
  std::vector<std::vector<State>> runs(eps.size());
  parallel_for(static_cast<int>(eps.size()), jobs, [&](int idx) {
    const State init = fam.at(eps[static_cast<std::size_t>(idx)], g, nc, np);
    if (s.stationary) {
      runs[static_cast<std::size_t>(idx)] = {solve_stationary(g, s.params, s.reaction, init).state};
    } else {
      auto res = solve_time_dependent(g, s.params, s.reaction, init, s.bc, s.dt, 1, true);
      runs[static_cast<std::size_t>(idx)] = std::move(res.trajectory.states);
    }
  });

  auto cascade_level = [&](int l, std::size_t t) -> const State& {
    const auto& list = cascade.orders[static_cast<std::size_t>(l - 1)];
    return s.stationary ? list.front() : list[t + 1];
  };

  ConvergenceReport rep;
  const std::vector<State>& base = runs[0];
  for (std::size_t e = 1; e < eps.size(); ++e) {
    const double ep = eps[e];
    double e1 = 0.0, e2 = 0.0;
    const auto& run = runs[e];
    for (std::size_t t = 0; t < run.size(); ++t) {
      const State& first = cascade_level(1, t);
      const State& second = cascade_level(2, t);
      auto accumulate = [&](const Field& a, const Field& b, const Field& d1, const Field& d2) {
        for (std::size_t k = 0; k < a.size(); ++k) {
          const double diff = a[k] - b[k];
          e1 = std::max(e1, std::abs(diff / ep - d1[k]));
          e2 = std::max(e2, std::abs(2.0 * (diff - ep * d1[k]) / (ep * ep) - d2[k]));
        }
      };
      for (int i = 0; i < nc; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        accumulate(run[t].u[ii], base[t].u[ii], first.u[ii], second.u[ii]);
      }
      for (int j = 0; j < np; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        accumulate(run[t].v[jj], base[t].v[jj], first.v[jj], second.v[jj]);
      }
    }
    rep.eps.push_back(ep);
    rep.first_error.push_back(e1);
    rep.second_error.push_back(e2);
  }
  rep.first_slope = loglog_slope(rep.eps, rep.first_error);
  rep.second_slope = loglog_slope(rep.eps, rep.second_error);
  rep.first_monotone = true;
  rep.second_monotone = true;
  for (std::size_t k = 1; k < rep.eps.size(); ++k) {
    rep.first_monotone &= rep.first_error[k] < rep.first_error[k - 1];
    rep.second_monotone &= rep.second_error[k] < rep.second_error[k - 1];
  }
  rep.pass = std::abs(rep.first_slope - 1.0) <= rep.first_tolerance &&
             std::abs(rep.second_slope - 1.0) <= rep.second_tolerance;
  return rep;
}

}  // namespace anomalykit
