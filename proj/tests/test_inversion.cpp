#include "anomalykit/config.hpp"
#include "anomalykit/error.hpp"
#include "anomalykit/inversion.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace anomalykit;

namespace {

// Cheap smooth stand-in for a forward model: a "trace" that depends on the
// circle through its centre and radius.
MeasurementSet toy_measurements(const Inclusion& inc) {
  const Circle* c = inc.as_circle();
  if (!c) throw GeometryError("toy model takes circles");
  if (c->radius < 0.05 || c->radius > 0.3) throw GeometryError("radius out of range");
  MeasurementSet m;
  m.kind = MeasurementSet::Kind::kStationary;
  m.nx = 16;
  m.ny = 16;
  m.chemicals = 1;
  Field f(40);
  for (int k = 0; k < 40; ++k) {
    const double t = 2 * std::numbers::pi * k / 40;
    const Vec2 b(0.5 + 0.5 * std::cos(t), 0.5 + 0.5 * std::sin(t));
    f[static_cast<std::size_t>(k)] = c->radius * c->radius / (b - c->center).squaredNorm();
  }
  m.neumann = {f};
  m.snapshot = {Field(256, 0.0)};
  return m;
}

InverseProblem toy_problem(const Inclusion& truth, std::vector<double> start) {
  InverseProblem ip;
  ip.observed = toy_measurements(truth);
  ip.simulate = toy_measurements;
  ip.initial = std::move(start);
  ip.max_forward_solves = 600;
  return ip;
}

}  // namespace

TEST_CASE("discrepancy of identical and shifted data") {
  const MeasurementSet a = toy_measurements(Inclusion::circle({0.5, 0.5}, 0.1));
  CHECK(discrepancy(a, a) == 0.0);
  MeasurementSet b = a;
  b.neumann[0][3] += 0.25;
  const DiscrepancyReport r = discrepancy_report(a, b);
  CHECK(r.sup == doctest::Approx(0.25));
  CHECK(r.samples == 40 + 256);
  CHECK(r.l2 == doctest::Approx(0.25 / std::sqrt(296.0)));
  MeasurementSet c = a;
  c.nx = 17;
  CHECK_THROWS_AS(discrepancy(a, c), LayoutMismatch);
}

TEST_CASE("noise is seeded and multiplicative") {
  const MeasurementSet a = toy_measurements(Inclusion::circle({0.5, 0.5}, 0.1));
  CHECK(add_noise(a, 0.01, 7) == add_noise(a, 0.01, 7));
  CHECK_FALSE(add_noise(a, 0.01, 7) == add_noise(a, 0.01, 8));
  CHECK(add_noise(a, 0.0, 7) == a);
  const MeasurementSet n = add_noise(a, 0.01, 7);
  for (std::size_t k = 0; k < 40; ++k) CHECK(std::abs(n.neumann[0][k] / a.neumann[0][k] - 1.0) < 0.06);
}

TEST_CASE("starting at the truth gives zero misfit") {
  const Inclusion truth = Inclusion::circle({0.45, 0.55}, 0.12);
  const ReconstructionResult r = reconstruct_inclusion(toy_problem(truth, truth.parameters()));
  CHECK(r.misfit < 1e-10);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(r.parameters[static_cast<std::size_t>(k)] - truth.parameters()[static_cast<std::size_t>(k)]) <= 1e-8);
}

TEST_CASE("Nelder-Mead recovers a circle and never increases the misfit") {
  const Inclusion truth = Inclusion::circle({0.42, 0.58}, 0.13);
  InverseProblem ip = toy_problem(truth, {0.5, 0.5, 0.1});
  ip.tolerance = 1e-5;
  const ReconstructionResult r = reconstruct_inclusion(ip);
  CHECK(std::hypot(r.parameters[0] - 0.42, r.parameters[1] - 0.58) < 1e-4);
  CHECK(std::abs(r.parameters[2] - 0.13) < 1e-4);
  CHECK(r.forward_solves <= ip.max_forward_solves);
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);
  CHECK_FALSE(r.stagnated);
  const ReconstructionResult again = reconstruct_inclusion(ip);
  CHECK(again.parameters == r.parameters);
  CHECK(again.history == r.history);
}

TEST_CASE("infeasible candidates are penalised, layout errors propagate") {
  const Inclusion truth = Inclusion::circle({0.5, 0.5}, 0.06);
  InverseProblem ip = toy_problem(truth, {0.5, 0.5, 0.08});
  ip.initial_step = 0.1;  // first simplex already leaves the feasible range
  const ReconstructionResult r = reconstruct_inclusion(ip);
  CHECK(r.misfit < 1e-3);
  InverseProblem bad = ip;
  bad.observed.nx = 20;
  CHECK_THROWS_AS(reconstruct_inclusion(bad), LayoutMismatch);
}

TEST_CASE("budget caps the forward solves") {
  InverseProblem ip = toy_problem(Inclusion::circle({0.42, 0.58}, 0.13), {0.5, 0.5, 0.1});
  ip.max_forward_solves = 20;
  const ReconstructionResult r = reconstruct_inclusion(ip);
  CHECK(r.forward_solves <= 20);
  CHECK(r.stagnated);
}

TEST_CASE("apex classification ignores positive scaling") {
  const ProbeSpec s = ProbeSpec::from_corner(
      TruncatedCorner::sector_2d({0.3, 0.3}, {0, 1}, std::numbers::pi / 6, 0.6), {20, 40, 80, 160});
  const Eigen::VectorXd apex = s.corner.apex;
  for (double scale : {1e-3, 1.0, 250.0}) {
    CHECK(apex_vanishing_test(s, [=](const Eigen::VectorXd&) { return scale; }).classification == ApexClass::kNonzero);
    CHECK(apex_vanishing_test(s, [=](const Eigen::VectorXd& x) { return scale * (x - apex).norm(); }).classification ==
          ApexClass::kVanishing);
    // a smooth residual with nonzero apex value
    CHECK(apex_vanishing_test(s, [=](const Eigen::VectorXd& x) { return scale * (1.0 + x(0)); }).classification ==
          ApexClass::kNonzero);
  }
  CHECK(apex_vanishing_test(s, [](const Eigen::VectorXd&) { return 0.0; }).classification ==
        ApexClass::kIdenticallyZero);
  CHECK(apex_class_name(ApexClass::kVanishing) == "vanishing");
}

TEST_CASE("boundary coefficient is recovered from the second-order field") {
  Json cfg = default_config();
  cfg["grid"]["nx"] = 32;
  cfg["grid"]["ny"] = 32;
  cfg["solver"]["dt"] = 0.05 / 31;
  cfg["data"]["f1"] = Json::array({"1", "0"});
  cfg["data"]["f2"] = Json::array();
  cfg["data"]["g1"] = Json::array({"0"});
  const CascadeSetup s = make_cascade_setup(cfg);
  const CascadeSolution c = solve_cascade(s, make_data(cfg, s.grid), 2);
  const Inclusion inc = make_inclusion(cfg["inclusion"]);
  const MultiIndex idx = parse_multi_index("u1u1", 2, 1);
  CoefficientOptions opt;
  opt.known[parse_multi_index("u1u2", 2, 1)] = 0.2;
  const auto plain = recover_boundary_coefficient(s, c, inc, 0, idx, opt);
  // a prey-mixed term multiplies the zero prey response and drops out
  opt.known[parse_multi_index("u1v1", 2, 1)] = -0.3;
  const auto samples = recover_boundary_coefficient(s, c, inc, 0, idx, opt);
  REQUIRE(samples.size() == plain.size());
  for (std::size_t k = 0; k < samples.size(); ++k) CHECK(samples[k].value == plain[k].value);
  CHECK(samples.size() == 32);
  for (const auto& smp : samples) {
    CHECK(std::abs(smp.value - 0.5) < 5 * s.grid.h_max());
    CHECK(inc.signed_distance(s.grid.node(smp.node)) > 0.0);
  }
  opt.outside = false;
  const auto inner = recover_boundary_coefficient(s, c, inc, 0, idx, opt);
  for (const auto& smp : inner) CHECK(std::abs(smp.value - 1.0) < 5 * s.grid.h_max());
  CHECK_THROWS_AS(recover_boundary_coefficient(s, c, inc, 0, parse_multi_index("u1u1u1", 2, 1), opt), ConfigError);
}
