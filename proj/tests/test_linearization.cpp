#include "anomalykit/config.hpp"
#include "anomalykit/error.hpp"
#include "anomalykit/linearization.hpp"

#include <doctest.h>

#include <cmath>

using namespace anomalykit;

namespace {

Json small_config(int n = 24) {
  Json cfg = default_config();
  cfg["grid"]["nx"] = n;
  cfg["grid"]["ny"] = n;
  cfg["model"]["final_time"] = 0.02;
  return cfg;
}

double diff_scaled(const State& a, const State& b, double s) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i)
    for (std::size_t k = 0; k < a.u[i].size(); ++k) m = std::max(m, std::abs(a.u[i][k] - s * b.u[i][k]));
  for (std::size_t j = 0; j < a.v.size(); ++j)
    for (std::size_t k = 0; k < a.v[j].size(); ++k) m = std::max(m, std::abs(a.v[j][k] - s * b.v[j][k]));
  return m;
}

void zero_prey_data(Json& cfg) {
  cfg["data"]["g1"] = Json::array({"0"});
  cfg["data"]["g2"] = Json::array();
}

}  // namespace

TEST_CASE("log-log slope of an exact power law") {
  CHECK(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}) == doctest::Approx(2.0));
  CHECK(std::isnan(loglog_slope({1, 2}, {1, 0})));
}

TEST_CASE("data family derivatives") {
  const Json cfg = small_config();
  const Grid g = make_grid(cfg);
  const DataFamily fam = make_data(cfg, g);
  const State d1 = fam.derivative(1, g, 2, 1);
  const State d2 = fam.derivative(2, g, 2, 1);
  const State d3 = fam.derivative(3, g, 2, 1);
  const State at = fam.at(0.2, g, 2, 1);
  for (std::size_t k = 0; k < g.size(); k += 11) {
    CHECK(d1.u[1][k] == fam.f1[1][k]);
    CHECK(d2.v[0][k] == 0.0);
    CHECK(d3.u[0][k] == 0.0);
    CHECK(at.u[0][k] == doctest::Approx(1.0 + 0.2 * fam.f1[0][k] + 0.02 * fam.f2[0][k]));
  }
  DataFamily bad = fam;
  bad.ladder = {0.1, 0.05, 0.06, 0.01};
  CHECK_THROWS_AS(bad.validate(g, 2, 1), ConfigError);
}

TEST_CASE("prey response vanishes without prey data") {
  Json cfg = small_config();
  zero_prey_data(cfg);
  const CascadeSetup s = make_cascade_setup(cfg);
  const CascadeSolution c = solve_cascade(s, make_data(cfg, s.grid), 2);
  for (int l = 1; l <= 2; ++l)
    for (const State& st : c.orders[static_cast<std::size_t>(l - 1)])
      for (double x : st.v[0]) CHECK(x == 0.0);
}

TEST_CASE("first order is linear in the data") {
  Json with_prey = small_config();
  Json without_prey = small_config();
  zero_prey_data(without_prey);
  // prey data must stay nonnegative, so negative factors run without it
  for (auto [cfg, alpha] : {std::pair{with_prey, 2.5}, std::pair{without_prey, -1.5}}) {
    const CascadeSetup s = make_cascade_setup(cfg);
    const DataFamily fam = make_data(cfg, s.grid);
    DataFamily scaled = fam;
    for (auto& f : scaled.f1)
      for (double& x : f) x *= alpha;
    for (auto& f : scaled.g1)
      for (double& x : f) x *= alpha;
    const CascadeSolution a = solve_first_order(s, fam);
    const CascadeSolution b = solve_first_order(s, scaled);
    for (std::size_t n = 0; n < a.levels(); n += 5) CHECK(diff_scaled(b.orders[0][n], a.orders[0][n], alpha) <= 1e-12);
  }
}

TEST_CASE("second order is linear in the second-order coefficients") {
  Json cfg = small_config();
  zero_prey_data(cfg);
  cfg["data"]["f2"] = Json::array();
  Json doubled = cfg;
  for (const char* side : {"interior", "exterior"})
    for (auto& [comp, table] : doubled["reaction"][side].items())
      for (auto& [key, val] : table.items())
        if (key.size() == 4) val = 2.0 * val.get<double>();
  const CascadeSetup s1 = make_cascade_setup(cfg);
  const CascadeSetup s2 = make_cascade_setup(doubled);
  const CascadeSolution a = solve_cascade(s1, make_data(cfg, s1.grid), 2);
  const CascadeSolution b = solve_cascade(s2, make_data(doubled, s2.grid), 2);
  CHECK(diff_scaled(a.final_state(1), b.final_state(1), 1.0) == 0.0);
  double scale = 0.0;
  for (double x : a.final_state(2).u[0]) scale = std::max(scale, std::abs(x));
  CHECK(scale > 0.0);
  for (std::size_t n = 0; n < a.levels(); n += 4) CHECK(diff_scaled(b.orders[1][n], a.orders[1][n], 2.0) <= 1e-12);
}

TEST_CASE("cascade orders extend one at a time") {
  const Json cfg = small_config();
  const CascadeSetup s = make_cascade_setup(cfg);
  const DataFamily fam = make_data(cfg, s.grid);
  const CascadeSolution first = solve_first_order(s, fam);
  const CascadeSolution second = solve_second_order(s, fam, first);
  const CascadeSolution all = solve_cascade(s, fam, 3);
  CHECK(all.max_order() == 3);
  CHECK(second.max_order() == 2);
  CHECK(all.orders[1] == second.orders[1]);
  CHECK_THROWS_AS(solve_cascade(s, fam, 4), ConfigError);
}

TEST_CASE("finite-difference errors shrink along the ladder") {
  const Json cfg = small_config(32);
  const CascadeSetup s = make_cascade_setup(cfg);
  const DataFamily fam = make_data(cfg, s.grid);
  const CascadeSolution c = solve_cascade(s, fam, 2);
  const ConvergenceReport serial = finite_difference_check(s, fam, c, 1);
  CHECK(serial.first_monotone);
  CHECK(serial.second_monotone);
  CHECK(std::abs(serial.first_slope - 1.0) <= 0.25);
  CHECK(std::abs(serial.second_slope - 1.0) <= 0.3);
  CHECK(serial.pass);
  const ConvergenceReport threaded = finite_difference_check(s, fam, c, 3);
  CHECK(threaded.first_error == serial.first_error);
  CHECK(threaded.second_error == serial.second_error);
}

TEST_CASE("stationary cascade is consistent too") {
  Json cfg = small_config(24);
  cfg["mode"] = "stationary";
  const CascadeSetup s = make_cascade_setup(cfg);
  const DataFamily fam = make_data(cfg, s.grid);
  const CascadeSolution c = solve_cascade(s, fam, 2);
  CHECK(c.stationary);
  CHECK(c.levels() == 1);
  const ConvergenceReport r = finite_difference_check(s, fam, c, 1);
  CHECK(std::abs(r.first_slope - 1.0) <= 0.25);
  CHECK(std::abs(r.second_slope - 1.0) <= 0.3);
}
