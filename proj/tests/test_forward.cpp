#include "anomalykit/config.hpp"
#include "anomalykit/error.hpp"
#include "anomalykit/forward.hpp"

#include <doctest.h>

#include <cmath>

using namespace anomalykit;

namespace {

PiecewiseReaction no_reaction(int nc, int np, std::vector<double> base) {
  TaylorReaction t(nc, np, std::move(base), 2);
  return PiecewiseReaction(t, t, Inclusion::circle({0.5, 0.5}, 0.1));
}

double max_change(const State& a, const State& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i)
    for (std::size_t k = 0; k < a.u[i].size(); ++k) m = std::max(m, std::abs(a.u[i][k] - b.u[i][k]));
  for (std::size_t j = 0; j < a.v.size(); ++j)
    for (std::size_t k = 0; k < a.v[j].size(); ++k) m = std::max(m, std::abs(a.v[j][k] - b.v[j][k]));
  return m;
}

}  // namespace

TEST_CASE("one-sided normal derivative is exact for quadratics") {
  const Grid g = build_grid(20, 24, Rect{0.0, 1.0, 0.0, 2.0});
  Field w(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 p = g.node(k);
    w[k] = p.x() * p.x() - 0.5 * p.y() * p.y() + p.x() * 0.3;
  }
  const Field dn = neumann_trace(g, w);
  const auto& b = g.boundary_nodes();
  for (std::size_t m = 0; m < b.size(); ++m) {
    const Vec2 p = g.node(b[m]);
    const Vec2 n = g.outward_normal(g.col(b[m]), g.row(b[m]));
    const Vec2 grad(2 * p.x() + 0.3, -p.y());
    CHECK(dn[m] == doctest::Approx(grad.dot(n)).epsilon(1e-9));
  }
}

TEST_CASE("Laplacian matrix matches the matrix-free stencil") {
  const Grid g = build_grid(16, 18, Rect{});
  Field w(g.size()), out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) w[k] = std::sin(3.0 * g.node(k).x()) + g.node(k).y();
  for (BoundaryKind bc : {BoundaryKind::kNeumann, BoundaryKind::kDirichlet}) {
    apply_laplacian(g, w, out, bc);
    const Eigen::VectorXd m = laplacian_matrix(g, bc) * Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(m[k] == doctest::Approx(out[k]).epsilon(1e-12));
  }
}

TEST_CASE("constant base state is preserved by the full model") {
  const Json cfg = default_config();
  const CascadeSetup s = make_cascade_setup(cfg);
  State st = State::constant(s.grid, s.reaction.base(), s.params.prey);
  ParabolicStepper stepper(s.grid, s.params, s.reaction, s.bc, s.dt);
  for (int n = 0; n < 200; ++n) {
    const State prev = st;
    stepper.step(st);
    CHECK(max_change(st, prev) <= 1e-12);
  }
}

TEST_CASE("mass is conserved without reactions") {
  const Grid g = build_grid(32, 32, Rect{});
  ModelParams p;
  p.chemicals = 2;
  p.prey = 1;
  p.d = {1.0, 0.3};
  p.delta = {0.7};
  p.cross = {{0.0}, {0.0}};
  p.taxis = {{0}, {0}};
  p.final_time = 0.01;
  p.validate();
  const PiecewiseReaction r = no_reaction(2, 1, {1.0, 0.5});
  const ReactionOnGrid rg(r, g, rasterize_inclusion(r.inclusion(), g));
  State st = State::constant(g, {1.0, 0.5}, 1);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec2 x = g.node(k);
    st.u[0][k] += 0.3 * std::exp(-20 * (x - Vec2(0.3, 0.4)).squaredNorm());
    st.v[0][k] = 0.2 + 0.1 * std::cos(5 * x.x());
  }
  ParabolicStepper stepper(g, p, rg, BoundaryKind::kNeumann, 1e-3);
  double m0 = g.integrate(st.u[0]), m1 = g.integrate(st.u[1]), m2 = g.integrate(st.v[0]);
  for (int n = 0; n < 100; ++n) {
    stepper.step(st);
    const double a = g.integrate(st.u[0]), b = g.integrate(st.u[1]), c = g.integrate(st.v[0]);
    CHECK(std::abs(a - m0) <= 1e-10 * std::abs(m0));
    CHECK(std::abs(b - m1) <= 1e-10 * std::abs(m1));
    CHECK(std::abs(c - m2) <= 1e-10 * std::abs(m2));
    m0 = a;
    m1 = b;
    m2 = c;
  }
}

TEST_CASE("taxis and cross-diffusion keep mass in flux form") {
  Json cfg = default_config();
  cfg["reaction"]["interior"] = Json::object();
  cfg["reaction"]["exterior"] = Json::object();
  const CascadeSetup s = make_cascade_setup(cfg);
  const DataFamily fam = make_data(cfg, s.grid);
  State st = fam.at(0.3, s.grid, 2, 1);
  ParabolicStepper stepper(s.grid, s.params, s.reaction, s.bc, s.dt);
  std::vector<double> before{s.grid.integrate(st.u[0]), s.grid.integrate(st.u[1]), s.grid.integrate(st.v[0])};
  for (int n = 0; n < 50; ++n) {
    stepper.step(st);
    const std::vector<double> after{s.grid.integrate(st.u[0]), s.grid.integrate(st.u[1]), s.grid.integrate(st.v[0])};
    for (int f = 0; f < 3; ++f) CHECK(std::abs(after[f] - before[f]) <= 1e-10 * std::abs(before[f]));
    before = after;
  }
}

TEST_CASE("stationary harmonic problem converges at second order") {
  std::vector<double> err;
  for (int n : {17, 33, 65}) {
    const Grid g = build_grid(n, n, Rect{});
    ModelParams p;
    p.chemicals = 1;
    p.prey = 0;
    p.d = {1.0};
    p.validate();
    const PiecewiseReaction r = no_reaction(1, 0, {0.0});
    const ReactionOnGrid rg(r, g, rasterize_inclusion(r.inclusion(), g));
    State dir = State::constant(g, {0.0}, 0);
    auto exact = [](const Vec2& x) { return std::exp(x.x()) * std::sin(x.y()) + x.x() * x.y(); };
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.is_boundary(k)) dir.u[0][k] = exact(g.node(k));
    NewtonOptions opt;
    opt.tolerance = 1e-14;
    const StationaryResult sr = solve_stationary(g, p, rg, dir, opt);
    double e = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) e = std::max(e, std::abs(sr.state.u[0][k] - exact(g.node(k))));
    err.push_back(e);
  }
  const double ratio = err[1] / err[2];
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("measurements have the documented layout") {
  Json cfg = default_config();
  cfg["grid"]["nx"] = 24;
  cfg["grid"]["ny"] = 20;
  cfg["model"]["final_time"] = 0.02;
  const CascadeSetup s = make_cascade_setup(cfg);
  const DataFamily fam = make_data(cfg, s.grid);
  const State init = fam.at(0.1, s.grid, 2, 1);
  const TimeDependentResult r = solve_time_dependent(s.grid, s.params, s.reaction, init, s.bc, s.dt, 5, true);
  const MeasurementSet& m = r.measurements;
  CHECK(r.steps == 20);
  CHECK(m.times.size() == 4);  // steps 5, 10, 15, 20
  for (std::size_t n = 1; n < m.times.size(); ++n) CHECK(m.times[n] > m.times[n - 1]);
  CHECK(m.times.back() == doctest::Approx(0.02));
  for (const auto& level : m.traces) {
    CHECK(level.size() == 3);
    for (const auto& f : level) CHECK(f.size() == s.grid.boundary_nodes().size());
  }
  CHECK(m.snapshot.size() == 3);
  CHECK(m.snapshot[0].size() == s.grid.size());
  const State& last = r.trajectory.states.back();
  for (std::size_t b = 0; b < s.grid.boundary_nodes().size(); ++b)
    CHECK(m.traces.back()[0][b] == last.u[0][s.grid.boundary_nodes()[b]]);
  CHECK(r.min_value >= -1e-8);
  CHECK(m.same_layout(m));
}

TEST_CASE("repeated solves are bit-identical") {
  Json cfg = default_config();
  cfg["grid"]["nx"] = 32;
  cfg["grid"]["ny"] = 32;
  const CascadeSetup s = make_cascade_setup(cfg);
  const DataFamily fam = make_data(cfg, s.grid);
  const State init = fam.at(0.1, s.grid, 2, 1);
  const auto a = solve_time_dependent(s.grid, s.params, s.reaction, init, s.bc, s.dt, 5);
  const auto b = solve_time_dependent(s.grid, s.params, s.reaction, init, s.bc, s.dt, 5);
  CHECK(a.measurements == b.measurements);
}

TEST_CASE("final time must be a whole number of steps") {
  Json cfg = default_config();
  cfg["grid"]["nx"] = 16;
  cfg["grid"]["ny"] = 16;
  const CascadeSetup s = make_cascade_setup(cfg);
  const State init = State::constant(s.grid, {1.0, 0.5}, 1);
  CHECK_THROWS_AS(solve_time_dependent(s.grid, s.params, s.reaction, init, s.bc, 0.0015, 1), ConfigError);
}

TEST_CASE("non-finite states raise solver errors") {
  const Grid g = build_grid(16, 16, Rect{});
  State st = State::constant(g, {1.0}, 0);
  st.u[0][40] = std::nan("");
  CHECK_THROWS_AS(check_finite(g, st), SolverError);
}

TEST_CASE("packing round-trips") {
  const Grid g = build_grid(16, 16, Rect{});
  State st = State::constant(g, {1.0, 2.0}, 1);
  st.v[0][3] = 0.25;
  const State back = unpack_state(pack_state(st), g.size(), 2, 1);
  CHECK(back.u == st.u);
  CHECK(back.v == st.v);
}
