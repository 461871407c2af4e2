/// @file bindings.cpp
/// @brief pybind11 module `anomalykit._core`. Configs cross the boundary as
/// JSON text; the Python package converts them to dicts.
#include "anomalykit/error.hpp"
#include "anomalykit/experiment.hpp"

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace anomalykit;

namespace {

Json parse(const std::string& text) { return text.empty() ? default_config() : Json::parse(text); }

py::dict manifest_dict(const RunManifest& m) {
  py::dict d;
  d["command"] = m.command;
  d["config_hash"] = m.config_hash;
  d["dir"] = m.dir.string();
  py::list files;
  for (const auto& f : m.files) files.append(py::make_tuple(f.path, f.bytes));
  d["files"] = files;
  d["timings"] = m.timings;
  d["summary"] = m.summary.dump();
  d["warnings"] = m.warnings;
  d["exit_code"] = m.exit_code;
  return d;
}

using Runner = RunManifest (*)(const Json&, const RunOptions&);

py::dict run(Runner f, const std::string& cfg, const std::string& out, int jobs, std::vector<int> only,
             const std::string& observed) {
  RunOptions opt;
  opt.out_dir = out;
  opt.jobs = jobs;
  opt.only = std::set<int>(only.begin(), only.end());
  if (!observed.empty()) opt.observed = observed;
  const Json c = parse(cfg);
  RunManifest m;
  {
    py::gil_scoped_release release;
    m = f(c, opt);
  }
  return manifest_dict(m);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reaction-anomaly identification for predator-prey chemotaxis models";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", m.attr("Error"));
  py::register_exception<GeometryError>(m, "GeometryError", m.attr("Error"));
  py::register_exception<SolverError>(m, "SolverError", m.attr("Error"));

  m.def("default_config", [] { return default_config().dump(); });
  m.def("config_hash", [](const std::string& cfg) { return config_hash(parse(cfg)); });
  m.def("apply_override", [](const std::string& cfg, const std::string& assignment) {
    Json c = parse(cfg);
    apply_override(c, assignment);
    return c.dump();
  });

  py::class_<Rect>(m, "Rect")
      .def(py::init([](double x0, double x1, double y0, double y1) { return Rect{x0, x1, y0, y1}; }),
           py::arg("x0") = 0.0, py::arg("x1") = 1.0, py::arg("y0") = 0.0, py::arg("y1") = 1.0);
  py::class_<Grid>(m, "Grid")
      .def(py::init(&build_grid), py::arg("nx"), py::arg("ny"), py::arg("bounds") = Rect{})
      .def_property_readonly("nx", &Grid::nx)
      .def_property_readonly("ny", &Grid::ny)
      .def_property_readonly("hx", &Grid::hx)
      .def_property_readonly("hy", &Grid::hy)
      .def("node", [](const Grid& g, int i, int j) { return std::make_pair(g.x(i), g.y(j)); })
      .def("boundary_nodes", &Grid::boundary_nodes)
      .def("integrate", &Grid::integrate);

  py::class_<Inclusion>(m, "Inclusion")
      .def_static("circle",
                  [](double cx, double cy, double r) { return Inclusion::circle({cx, cy}, r); })
      .def_static("polygon",
                  [](const std::vector<std::pair<double, double>>& v) {
                    std::vector<Vec2> pts;
                    for (const auto& [x, y] : v) pts.emplace_back(x, y);
                    return Inclusion::polygon(pts);
                  })
      .def("signed_distance", [](const Inclusion& inc, double x, double y) { return inc.signed_distance({x, y}); })
      .def("area", &Inclusion::area)
      .def("parameters", &Inclusion::parameters)
      .def_property_readonly("kind", &Inclusion::kind_name);

  m.def("rasterized_area", [](const Inclusion& inc, const Grid& g) { return rasterize_inclusion(inc, g).area(g); });

  m.def(
      "sector_probe",
      [](double half_angle, double radius, std::vector<double> ladder, double alpha) {
        const ProbeSpec s = ProbeSpec::from_corner(TruncatedCorner::sector_2d({0, 0}, {1, 0}, half_angle, radius),
                                                   std::move(ladder));
        const CornerProbeResult r = probe_corner(s, alpha);
        py::dict d;
        std::vector<Complex> plain, weighted;
        for (const auto& p : r.points) {
          plain.push_back(p.integral);
          weighted.push_back(p.weighted);
        }
        d["integrals"] = plain;
        d["weighted"] = weighted;
        d["exponent"] = r.fit.exponent;
        d["weighted_exponent"] = r.weighted_fit.exponent;
        d["large_tau"] = r.large_tau;
        d["cap_ratios_monotone"] = r.cap_ratios_monotone;
        return d;
      },
      py::arg("half_angle"), py::arg("radius") = 0.6, py::arg("ladder") = std::vector<double>{20, 40, 80, 160},
      py::arg("alpha") = 1.0);

  m.def("laplace_tail", [](double alpha, Complex mu, double delta) {
    const LaplaceTail t = laplace_tail_identity(alpha, mu, delta);
    return py::make_tuple(t.lhs, t.residual, t.bound_applies, t.bound_holds);
  });

  m.def(
      "simulate",
      [](const std::string& cfg, double cx, double cy, double r) {
        const ForwardModel fm(parse(cfg));
        MeasurementSet ms;
        {
          py::gil_scoped_release release;
          ms = fm.simulate(Inclusion::circle({cx, cy}, r));
        }
        return measurements_to_json(ms, "").dump();
      },
      py::arg("config"), py::arg("cx"), py::arg("cy"), py::arg("r"));
  m.def("discrepancy", [](const std::string& a, const std::string& b) {
    return discrepancy(measurements_from_json(Json::parse(a)), measurements_from_json(Json::parse(b)));
  });

  m.def("run_forward", [](const std::string& c, const std::string& out, int jobs) {
    return run(&run_forward, c, out, jobs, {}, "");
  }, py::arg("config") = "", py::arg("out") = "", py::arg("jobs") = 1);
  m.def("run_linearize", [](const std::string& c, const std::string& out, int jobs) {
    return run(&run_linearize, c, out, jobs, {}, "");
  }, py::arg("config") = "", py::arg("out") = "", py::arg("jobs") = 1);
  m.def("run_probe", [](const std::string& c, const std::string& out, int jobs) {
    return run(&run_probe, c, out, jobs, {}, "");
  }, py::arg("config") = "", py::arg("out") = "", py::arg("jobs") = 1);
  m.def("run_invert", [](const std::string& c, const std::string& out, int jobs, const std::string& observed) {
    return run(&run_invert, c, out, jobs, {}, observed);
  }, py::arg("config") = "", py::arg("out") = "", py::arg("jobs") = 1, py::arg("observed") = "");
  m.def("run_verify", [](const std::string& c, const std::string& out, int jobs, std::vector<int> only) {
    return run(&run_verify, c, out, jobs, std::move(only), "");
  }, py::arg("config") = "", py::arg("out") = "", py::arg("jobs") = 1, py::arg("only") = std::vector<int>{});
}
