#include "anomalykit/experiment.hpp"

#include "anomalykit/error.hpp"
#include "anomalykit/parallel.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace anomalykit {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

std::string g4(double x) { return fmt("%.4g", x); }

Inclusion::Kind candidate_kind(const std::string& name) {
  if (name == "circle") return Inclusion::Kind::kCircle;
  if (name == "polygon") return Inclusion::Kind::kPolygon;
  if (name == "star") return Inclusion::Kind::kStar;
  throw ConfigError("invert.candidate must be circle, polygon or star");
}

State state_from_snapshot(const MeasurementSet& m) {
  State s;
  for (int f = 0; f < m.field_count(); ++f) {
    if (f < m.chemicals) {
      s.u.push_back(m.snapshot[static_cast<std::size_t>(f)]);
    } else {
      s.v.push_back(m.snapshot[static_cast<std::size_t>(f)]);
    }
  }
  return s;
}

Json fit_json(const AsymptoticFit& f) { return {{"exponent", f.exponent}, {"constant", f.constant}, {"r2", f.r2}}; }

Json norms_json(const BoundaryNorms& n) {
  return {{"face_h1", n.face_h1},     {"cap_h1", n.cap_h1},           {"h1", n.h1},
          {"face_flux", n.face_flux}, {"cap_flux", n.cap_flux},       {"flux", n.flux},
          {"h1_ratio", n.h1_ratio},   {"flux_ratio", n.flux_ratio},   {"cap_h1_ratio", n.cap_h1_ratio},
          {"cap_flux_ratio", n.cap_flux_ratio}};
}

/// Config copy with the grid replaced by n x n nodes.
Json with_grid(Json cfg, int n) {
  cfg["grid"]["nx"] = n;
  cfg["grid"]["ny"] = n;
  return cfg;
}

MultiIndex coefficient_index(const Json& cfg, int& component) {
  const int nc = cfg.at("model").at("chemicals").get<int>();
  const int np = cfg.at("model").value("prey", 0);
  const std::string comp = require(cfg, "invert.coefficient.component").get<std::string>();
  if (comp.size() < 2 || comp[0] != 'u') throw ConfigError("invert.coefficient.component must name a chemical u1..uN");
  component = std::stoi(comp.substr(1)) - 1;
  if (component < 0 || component >= nc) throw ConfigError("invert.coefficient.component out of range");
  return parse_multi_index(require(cfg, "invert.coefficient.index").get<std::string>(), nc, np);
}

/// Probe data: unit first-order data on the chemicals of the index, no
/// prey data, so the second-order equation reduces to the recovery identity.
Json recovery_config(Json cfg, const MultiIndex& index) {
  const int nc = cfg.at("model").at("chemicals").get<int>();
  const int np = cfg.at("model").value("prey", 0);
  Json f1 = Json::array();
  for (int a = 0; a < nc; ++a) f1.push_back(index[static_cast<std::size_t>(a)] > 0 ? "1" : "0");
  Json g1 = Json::array();
  for (int j = 0; j < np; ++j) g1.push_back("0");
  cfg["data"]["f1"] = f1;
  cfg["data"]["f2"] = Json::array();
  cfg["data"]["g1"] = g1;
  cfg["data"]["g2"] = Json::array();
  return cfg;
}

/// Other second-order exterior coefficients of the same equation.
std::map<MultiIndex, double> known_coefficients(const PiecewiseReaction& r, int component, const MultiIndex& index) {
  std::map<MultiIndex, double> known;
  for (const auto& [m, e] : r.exterior().terms(component)) {
    if (m == index || multi_index_order(m) != 2) continue;
    if (!e.is_constant()) throw ConfigError("known coefficients must be constants for boundary recovery");
    known[m] = e.constant_value();
  }
  return known;
}

CoefficientOptions coefficient_options(const Json& cfg) {
  CoefficientOptions o;
  const Json* c = nullptr;
  if (cfg.contains("invert") && cfg["invert"].contains("coefficient")) c = &cfg["invert"]["coefficient"];
  if (c) {
    o.samples = c->value("samples", o.samples);
    o.offset_cells = c->value("offset_cells", o.offset_cells);
    o.time_fraction = c->value("time_fraction", o.time_fraction);
    o.outside = c->value("outside", o.outside);
  }
  return o;
}

struct CoefficientRun {
  std::vector<CoefficientSample> samples;
  double max_error = 0.0;
  double h = 0.0;
};

CoefficientRun run_coefficient_recovery(const Json& cfg, const Inclusion& estimate) {
  int component = 0;
  const MultiIndex index = coefficient_index(cfg, component);
  const Json rc = recovery_config(cfg, index);
  const CascadeSetup s = make_cascade_setup(rc);
  const DataFamily fam = make_data(rc, s.grid);
  const CascadeSolution casc = solve_cascade(s, fam, 2);
  const PiecewiseReaction r = make_reaction(rc, make_inclusion(require(rc, "inclusion")));
  CoefficientOptions opt = coefficient_options(rc);
  opt.known = known_coefficients(r, component, index);
  CoefficientRun out;
  out.samples = recover_boundary_coefficient(s, casc, estimate, component, index, opt);
  out.h = s.grid.h_max();
  const auto side = opt.outside ? PiecewiseReaction::Side::kExterior : PiecewiseReaction::Side::kInterior;
  const Expression& truth = r.taylor_coefficient(component, index, side);
  for (const auto& smp : out.samples) {
    const Vec2 x = s.grid.node(smp.node);
    out.max_error = std::max(out.max_error, std::abs(smp.value - truth(x.x(), x.y())));
  }
  return out;
}

std::vector<ProbeSpec> probe_specs(const Json& cfg, std::vector<std::string>* names = nullptr) {
  const auto ladder = make_tau_ladder(cfg);
  std::vector<ProbeSpec> specs;
  for (const auto& c : make_corners(cfg)) {
    specs.push_back(ProbeSpec::from_corner(c.corner, ladder));
    if (names) names->push_back(c.name);
  }
  return specs;
}

}  // namespace

std::filesystem::path resolve_output_dir(const Json& cfg, const RunOptions& opt, const std::string& command) {
  std::filesystem::path base;
  if (!opt.out_dir.empty()) {
    base = opt.out_dir;
  } else if (const char* env = std::getenv("ANOMALYKIT_OUT"); env && *env) {
    base = env;
  } else {
    base = cfg.contains("output") ? cfg["output"].value("dir", std::string("out")) : std::string("out");
  }
  return base / command;
}

Json RunManifest::to_json() const {
  Json j;
  j["format_version"] = kFormatVersion;
  j["command"] = command;
  j["config_hash"] = config_hash;
  Json files_json = Json::array();
  for (const auto& f : files) files_json.push_back({{"path", f.path}, {"bytes", f.bytes}});
  j["files"] = files_json;
  j["timings"] = timings;
  j["summary"] = summary;
  j["warnings"] = warnings;
  j["exit_code"] = exit_code;
  return j;
}

void write_manifest(const RunManifest& m) {
  std::filesystem::create_directories(m.dir);
  std::ofstream out(m.dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write manifest in " + m.dir.string());
  out << m.to_json().dump(2) << "\n";
}

ForwardModel::ForwardModel(const Json& cfg) : cfg_(cfg), grid_(make_grid(cfg)), params_(make_params(cfg)) {
  bc_ = make_boundary(cfg);
  stationary_ = is_stationary(cfg);
  inclusion_ = make_inclusion(require(cfg, "inclusion"));
  const DataFamily fam = make_data(cfg, grid_);
  const double eps = cfg.at("data").value("forward_eps", 0.1);
  initial_ = fam.at(eps, grid_, params_.chemicals, params_.prey);
  dt_ = require(cfg, "solver.dt").get<double>();
  store_every_ = cfg.at("solver").value("store_every", 1);
  newton_ = make_newton(cfg);
  make_reaction(cfg_, inclusion_);  // validate the reaction tables up front
}

MeasurementSet ForwardModel::simulate(const Inclusion& inc, State* final_state) const {
  inc.require_inside(grid_);
  const PiecewiseReaction r = make_reaction(cfg_, inc);
  const ReactionOnGrid rg(r, grid_, rasterize_inclusion(inc, grid_));
  if (stationary_) {
    StationaryResult sr = solve_stationary(grid_, params_, rg, initial_, newton_);
    if (final_state) *final_state = sr.state;
    return sr.measurements;
  }
  TimeDependentResult tr = solve_time_dependent(grid_, params_, rg, initial_, bc_, dt_, store_every_);
  if (final_state) *final_state = state_from_snapshot(tr.measurements);
  return tr.measurements;
}

RunManifest run_forward(const Json& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  RunManifest man;
  man.command = "forward";
  man.config_hash = config_hash(cfg);
  man.dir = resolve_output_dir(cfg, opt, "forward");
  const ForwardModel fm(cfg);
  State fin;
  const MeasurementSet m = fm.simulate(fm.inclusion(), &fin);
  man.timings["solve"] = seconds_since(t0);
  ArtifactWriter w(man.dir, man.config_hash);
  w.json("measurements.json", measurements_to_json(m, man.config_hash));
  w.field_csv("snapshot.csv", fm.grid(), fin);
  man.files = w.files();
  man.summary = {{"kind", fm.stationary() ? "stationary" : "parabolic"},
                 {"boundary_nodes", fm.grid().boundary_nodes().size()},
                 {"time_levels", m.times.size()}};
  man.timings["total"] = seconds_since(t0);
  write_manifest(man);
  return man;
}

RunManifest run_linearize(const Json& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  RunManifest man;
  man.command = "linearize";
  man.config_hash = config_hash(cfg);
  man.dir = resolve_output_dir(cfg, opt, "linearize");
  const CascadeSetup s = make_cascade_setup(cfg);
  const DataFamily fam = make_data(cfg, s.grid);
  const int order = cfg.contains("linearize") ? cfg["linearize"].value("max_order", 2) : 2;
  if (order < 1 || order > 3) throw ConfigError("linearize.max_order must be 1, 2 or 3");
  const CascadeSolution casc = solve_cascade(s, fam, std::max(order, 2));
  man.timings["cascade"] = seconds_since(t0);
  const auto t1 = Clock::now();
  const ConvergenceReport rep = finite_difference_check(s, fam, casc, opt.jobs);
  man.timings["finite_difference"] = seconds_since(t1);

  ArtifactWriter w(man.dir, man.config_hash);
  Json j;
  j["eps"] = rep.eps;
  j["first_error"] = rep.first_error;
  j["second_error"] = rep.second_error;
  j["first_slope"] = rep.first_slope;
  j["second_slope"] = rep.second_slope;
  j["first_monotone"] = rep.first_monotone;
  j["second_monotone"] = rep.second_monotone;
  j["first_tolerance"] = rep.first_tolerance;
  j["second_tolerance"] = rep.second_tolerance;
  j["pass"] = rep.pass;
  j["mode"] = s.stationary ? "stationary" : "parabolic";
  w.json("convergence.json", j);
  for (int l = 1; l <= casc.max_order(); ++l) w.field_csv("order" + std::to_string(l) + ".csv", s.grid, casc.final_state(l));
  man.files = w.files();
  man.summary = {{"first_slope", rep.first_slope}, {"second_slope", rep.second_slope}, {"pass", rep.pass}};
  if (!rep.pass) man.warnings.push_back("finite-difference slopes outside tolerance");
  man.timings["total"] = seconds_since(t0);
  write_manifest(man);
  return man;
}

RunManifest run_probe(const Json& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  RunManifest man;
  man.command = "probe";
  man.config_hash = config_hash(cfg);
  man.dir = resolve_output_dir(cfg, opt, "probe");
  const double alpha = cfg.at("probe").value("alpha", 1.0);
  std::vector<std::string> names;
  const auto specs = probe_specs(cfg, &names);
  ArtifactWriter w(man.dir, man.config_hash);
  Json summary = Json::object();
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const auto tc = Clock::now();
    const CornerProbeResult r = probe_corner(specs[c], alpha, opt.jobs);
    man.timings[names[c]] = seconds_since(tc);
    std::vector<std::vector<std::string>> rows;
    std::vector<double> taus;
    std::vector<Complex> vals;
    for (const auto& p : r.points) {
      taus.push_back(p.tau);
      vals.push_back(p.integral);
      std::vector<double> mags;
      for (const auto& v : vals) mags.push_back(std::abs(v));
      const std::string slope = taus.size() >= 2 ? format_double(loglog_slope(taus, mags)) : "";
      rows.push_back({format_double(p.tau), format_double(p.integral.real()), format_double(p.integral.imag()),
                      format_double(std::abs(p.integral)), slope});
    }
    w.csv("probe_" + names[c] + ".csv", "tau,re,im,abs,exponent_so_far", rows);

    Json j;
    j["corner"] = names[c];
    j["dim"] = r.dim;
    j["alpha"] = r.alpha;
    j["rho"] = specs[c].rho;
    j["min_decay_margin"] = specs[c].min_decay_margin();
    j["large_tau"] = r.large_tau;
    j["fit"] = fit_json(r.fit);
    j["weighted_fit"] = fit_json(r.weighted_fit);
    j["decay_ok"] = r.decay_ok;
    j["weighted_decay_ok"] = r.weighted_decay_ok;
    j["lower_bound_ok"] = r.lower_bound_ok;
    j["cap_ratios_monotone"] = r.cap_ratios_monotone;
    j["full_ratios_monotone"] = r.full_ratios_monotone;
    Json pts = Json::array();
    for (const auto& p : r.points) {
      pts.push_back({{"tau", p.tau},
                     {"integral", {p.integral.real(), p.integral.imag()}},
                     {"weighted", {p.weighted.real(), p.weighted.imag()}},
                     {"norms", norms_json(p.norms)}});
    }
    j["points"] = pts;
    w.json("probe_" + names[c] + ".json", j);
    summary[names[c]] = {{"exponent", r.fit.exponent}, {"weighted_exponent", r.weighted_fit.exponent}};
    if (!r.large_tau) {
      man.warnings.push_back("corner " + names[c] + ": tau*rho*h = " + g4(specs[c].min_decay_margin()) +
                             " is below 8; asymptotic regime not reached");
    }
  }
  man.files = w.files();
  man.summary = summary;
  man.timings["total"] = seconds_since(t0);
  write_manifest(man);
  return man;
}

RunManifest run_invert(const Json& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  RunManifest man;
  man.command = "invert";
  man.config_hash = config_hash(cfg);
  man.dir = resolve_output_dir(cfg, opt, "invert");
  const ForwardModel fm(cfg);
  const Json& inv = require(cfg, "invert");
  const double noise = inv.value("noise", 0.0);
  const auto noise_seed = cfg.contains("seeds") ? cfg["seeds"].value("noise", 1ull) : 1ull;
  MeasurementSet observed = opt.observed ? load_measurements(*opt.observed) : fm.simulate(fm.inclusion());
  observed = add_noise(observed, noise, noise_seed);

  InverseProblem ip;
  ip.observed = observed;
  ip.simulate = [&fm](const Inclusion& inc) { return fm.simulate(inc); };
  ip.kind = candidate_kind(inv.value("candidate", std::string("circle")));
  ip.initial = require(inv, "initial").get<std::vector<double>>();
  ip.initial_step = inv.value("initial_step", ip.initial_step);
  ip.max_forward_solves = inv.value("max_forward_solves", ip.max_forward_solves);
  ip.restarts = inv.value("restarts", ip.restarts);
  ip.tolerance = inv.value("tolerance", ip.tolerance);
  const std::string norm = inv.value("norm", std::string("l2"));
  if (norm != "l2" && norm != "sup") throw ConfigError("invert.norm must be 'l2' or 'sup'");
  ip.norm = norm == "sup" ? MisfitNorm::kSup : MisfitNorm::kL2;
  ip.seed = cfg.contains("seeds") ? cfg["seeds"].value("optimizer", 1ull) : 1ull;
  ip.noise_level = noise;
  const ReconstructionResult res = reconstruct_inclusion(ip);
  man.timings["reconstruction"] = seconds_since(t0);

  ArtifactWriter w(man.dir, man.config_hash);
  Json j;
  j["candidate"] = inv.value("candidate", std::string("circle"));
  j["parameters"] = res.parameters;
  j["initial"] = ip.initial;
  j["misfit"] = res.misfit;
  j["norm"] = norm;
  j["history"] = res.history;
  j["forward_solves"] = res.forward_solves;
  j["restarts_run"] = res.restarts_run;
  j["stagnated"] = res.stagnated;
  j["optimizer_seed"] = res.seed;
  j["noise_level"] = noise;
  j["noise_seed"] = noise_seed;
  j["observed"] = opt.observed ? opt.observed->filename().string() : std::string("self");

  const Inclusion estimate = Inclusion::from_parameters(ip.kind, res.parameters);
  if (!fm.stationary()) {
    const auto t1 = Clock::now();
    const CoefficientRun cr = run_coefficient_recovery(cfg, estimate);
    man.timings["coefficient"] = seconds_since(t1);
    std::vector<std::vector<std::string>> rows;
    double mean = 0.0;
    for (const auto& s : cr.samples) {
      rows.push_back({format_double(s.point.x()), format_double(s.point.y()), std::to_string(s.node),
                      format_double(s.value)});
      mean += s.value / static_cast<double>(cr.samples.size());
    }
    w.csv("coefficients.csv", "x,y,node,value", rows);
    j["coefficient"] = {{"component", inv.at("coefficient").value("component", std::string())},
                        {"index", inv.at("coefficient").value("index", std::string())},
                        {"samples", cr.samples.size()},
                        {"mean", mean},
                        {"max_error_vs_config", cr.max_error}};
  } else {
    man.warnings.push_back("coefficient recovery needs the parabolic cascade; skipped in stationary mode");
  }
  w.json("reconstruction.json", j);
  man.files = w.files();
  man.summary = {{"misfit", res.misfit}, {"forward_solves", res.forward_solves}, {"stagnated", res.stagnated}};
  if (res.stagnated) man.warnings.push_back("all restarts stagnated above the noise floor");
  man.timings["total"] = seconds_since(t0);
  write_manifest(man);
  return man;
}

RunManifest run_verify(const Json& cfg, const RunOptions& opt) {
  const auto t0 = Clock::now();
  RunManifest man;
  man.command = "verify";
  man.config_hash = config_hash(cfg);
  man.dir = resolve_output_dir(cfg, opt, "verify");
  ArtifactWriter w(man.dir, man.config_hash);
  const AcceptanceRun run = run_acceptance(cfg, AcceptanceTolerances{}, opt.only, opt.jobs, man.dir);
  Json list = Json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : run.results) {
    list.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    rows.push_back({std::to_string(r.id), r.name, r.pass ? "pass" : "fail", "\"" + r.detail + "\""});
    man.timings["criterion_" + std::to_string(r.id)] = r.seconds;
    char key[8];
    std::snprintf(key, sizeof key, "c%02d", r.id);
    man.summary[key] = r.pass ? "pass" : "fail";
  }
  // per-criterion files were written by run_acceptance; list them too
  for (const auto& r : run.results) {
    if (r.id == 11) continue;
    char name[32];
    std::snprintf(name, sizeof name, "criteria/c%02d.json", r.id);
    const auto p = man.dir / name;
    if (std::filesystem::exists(p)) man.files.push_back({name, std::filesystem::file_size(p)});
  }
  w.json("acceptance.json", {{"criteria", list}, {"all_pass", run.all_pass()}});
  w.csv("acceptance.csv", "id,name,result,detail", rows);
  for (const auto& f : w.files()) man.files.push_back(f);
  man.exit_code = run.all_pass() ? 0 : 3;
  man.timings["total"] = seconds_since(t0);
  write_manifest(man);
  return man;
}

bool AcceptanceRun::all_pass() const {
  return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
}

std::string criterion_name(int id) {
  switch (id) {
    case 1: return "cgo_decay";
    case 2: return "weighted_decay";
    case 3: return "laplace_tail";
    case 4: return "boundary_norm_monotonicity";
    case 5: return "linearization_consistency";
    case 6: return "reduction_invariants";
    case 7: return "distinguishability";
    case 8: return "shape_recovery";
    case 9: return "coefficient_recovery";
    case 10: return "apex_test";
    case 11: return "determinism";
  }
  throw ConfigError("acceptance criteria are numbered 1 to 11");
}

namespace {

CriterionResult criterion_cgo_decay(const Json& cfg, const AcceptanceTolerances& tol, int jobs) {
  CriterionResult r;
  std::vector<std::string> names;
  const auto specs = probe_specs(cfg, &names);
  int sectors = 0, solids = 0;
  bool ok = true;
  std::ostringstream d;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const CornerProbeResult p = probe_corner(specs[c], 1.0, jobs);
    const double target = -p.dim;
    const double t = p.dim == 2 ? tol.decay_2d : tol.decay_3d;
    const bool good = std::abs(p.fit.exponent - target) <= t && p.large_tau;
    (p.dim == 2 ? sectors : solids) += 1;
    ok = ok && good;
    r.data[names[c]] = {{"dim", p.dim}, {"exponent", p.fit.exponent}, {"r2", p.fit.r2}, {"pass", good}};
    d << names[c] << " " << g4(p.fit.exponent) << "; ";
  }
  if (sectors < 3 || solids < 1) {
    ok = false;
    d << "needs three 2-D sectors and one 3-D corner";
  }
  r.pass = ok;
  r.detail = d.str();
  return r;
}

CriterionResult criterion_weighted(const Json& cfg, const AcceptanceTolerances& tol, int jobs) {
  CriterionResult r;
  std::vector<std::string> names;
  const auto specs = probe_specs(cfg, &names);
  bool ok = true;
  int used = 0;
  std::ostringstream d;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    if (specs[c].corner.dim != 2) continue;
    ++used;
    const CornerProbeResult p = probe_corner(specs[c], 1.0, jobs);
    const bool good = std::abs(p.weighted_fit.exponent + 3.0) <= tol.weighted_decay_2d;
    ok = ok && good;
    r.data[names[c]] = {{"exponent", p.weighted_fit.exponent}, {"r2", p.weighted_fit.r2}, {"pass", good}};
    d << names[c] << " " << g4(p.weighted_fit.exponent) << "; ";
  }
  r.pass = ok && used > 0;
  r.detail = d.str();
  return r;
}

CriterionResult criterion_laplace(const AcceptanceTolerances& tol) {
  CriterionResult r;
  double worst = 0.0;
  bool bound = true;
  int applied = 0;
  Json pts = Json::array();
  for (double alpha : {0.0, 1.0, 2.5}) {
    for (Complex mu : {Complex(1.0, 0.0), Complex(2.0, 1.0), Complex(10.0, 0.0)}) {
      for (double delta : {0.5, 1.0, 2.0}) {
        const LaplaceTail t = laplace_tail_identity(alpha, mu, delta);
        worst = std::max(worst, t.residual);
        if (t.bound_applies) {
          ++applied;
          bound = bound && t.bound_holds;
        }
        pts.push_back({{"alpha", alpha},
                       {"mu", {mu.real(), mu.imag()}},
                       {"delta", delta},
                       {"residual", t.residual},
                       {"bound_applies", t.bound_applies},
                       {"bound_holds", t.bound_holds}});
      }
    }
  }
  r.data = {{"points", pts}, {"max_residual", worst}, {"bound_checks", applied}};
  r.pass = worst < tol.laplace_residual && bound;
  r.detail = "max residual " + g4(worst) + ", tail bound checked at " + std::to_string(applied) + " points" +
             (bound ? "" : " (violated)");
  return r;
}

CriterionResult criterion_norms(const Json& cfg, int jobs) {
  CriterionResult r;
  std::vector<std::string> names;
  const auto specs = probe_specs(cfg, &names);
  bool ok = true;
  std::ostringstream d;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const CornerProbeResult p = probe_corner(specs[c], 1.0, jobs);
    Json h1 = Json::array(), flux = Json::array();
    for (const auto& pt : p.points) {
      h1.push_back(pt.norms.cap_h1_ratio);
      flux.push_back(pt.norms.cap_flux_ratio);
    }
    ok = ok && p.cap_ratios_monotone;
    r.data[names[c]] = {{"cap_h1_ratio", h1}, {"cap_flux_ratio", flux}, {"monotone", p.cap_ratios_monotone}};
    d << names[c] << (p.cap_ratios_monotone ? " ok; " : " not monotone; ");
  }
  r.pass = ok;
  r.detail = d.str();
  return r;
}

CriterionResult criterion_linearization(const Json& cfg, const AcceptanceTolerances& tol, int jobs) {
  CriterionResult r;
  const Json c = with_grid(cfg, 64);
  const CascadeSetup s = make_cascade_setup(c);
  const DataFamily fam = make_data(c, s.grid);
  const CascadeSolution casc = solve_cascade(s, fam, 2);
  const ConvergenceReport rep = finite_difference_check(s, fam, casc, jobs);
  const bool first = std::abs(rep.first_slope - 1.0) <= tol.first_slope;
  const bool second = std::abs(rep.second_slope - 1.0) <= tol.second_slope;
  r.pass = first && second && s.params.chemicals == 2 && s.params.prey == 1;
  r.data = {{"eps", rep.eps},
            {"first_error", rep.first_error},
            {"second_error", rep.second_error},
            {"first_slope", rep.first_slope},
            {"second_slope", rep.second_slope},
            {"chemicals", s.params.chemicals},
            {"prey", s.params.prey}};
  r.detail = "slopes " + g4(rep.first_slope) + " / " + g4(rep.second_slope);
  if (s.params.chemicals != 2 || s.params.prey != 1) r.detail += " (benchmark needs two chemicals and one prey)";
  return r;
}

CriterionResult criterion_reductions(const Json& cfg, const AcceptanceTolerances& tol) {
  CriterionResult r;
  // first-order prey response without prey data
  Json c = cfg;
  const int np = c.at("model").value("prey", 0);
  Json g1 = Json::array();
  for (int j = 0; j < np; ++j) g1.push_back("0");
  c["data"]["g1"] = g1;
  c["data"]["g2"] = Json::array();
  bool prey_zero = true;
  {
    const CascadeSetup s = make_cascade_setup(c);
    const DataFamily fam = make_data(c, s.grid);
    const CascadeSolution first = solve_first_order(s, fam);
    for (const auto& st : first.orders[0])
      for (const auto& v : st.v)
        for (double x : v) prey_zero = prey_zero && x == 0.0;
  }

  // constant base state under the full model
  double worst_const = 0.0;
  {
    const CascadeSetup s = make_cascade_setup(cfg);
    State st = State::constant(s.grid, s.reaction.base(), s.params.prey);
    ParabolicStepper stepper(s.grid, s.params, s.reaction, s.bc, s.dt);
    for (int n = 0; n < tol.constant_state_steps; ++n) {
      const State prev = st;
      stepper.step(st);
      for (std::size_t i = 0; i < st.u.size(); ++i)
        for (std::size_t k = 0; k < st.u[i].size(); ++k)
          worst_const = std::max(worst_const, std::abs(st.u[i][k] - prev.u[i][k]));
      for (std::size_t j = 0; j < st.v.size(); ++j)
        for (std::size_t k = 0; k < st.v[j].size(); ++k)
          worst_const = std::max(worst_const, std::abs(st.v[j][k] - prev.v[j][k]));
    }
  }

  // mass balance without reactions
  double worst_mass = 0.0;
  {
    Json m = cfg;
    m["reaction"]["interior"] = Json::object();
    m["reaction"]["exterior"] = Json::object();
    m["boundary"] = "neumann";
    const CascadeSetup s = make_cascade_setup(m);
    const DataFamily fam = make_data(m, s.grid);
    State st = fam.at(m.at("data").value("forward_eps", 0.1), s.grid, s.params.chemicals, s.params.prey);
    ParabolicStepper stepper(s.grid, s.params, s.reaction, s.bc, s.dt);
    auto masses = [&](const State& x) {
      std::vector<double> out;
      for (const auto& f : x.u) out.push_back(s.grid.integrate(f));
      for (const auto& f : x.v) out.push_back(s.grid.integrate(f));
      return out;
    };
    std::vector<double> before = masses(st);
    for (int n = 0; n < 100; ++n) {
      stepper.step(st);
      const std::vector<double> after = masses(st);
      for (std::size_t f = 0; f < after.size(); ++f)
        worst_mass = std::max(worst_mass, std::abs(after[f] - before[f]) / std::max(std::abs(before[f]), 1e-300));
      before = after;
    }
  }
  // nonnegativity monitor on the benchmark run
  double min_value = 0.0;
  {
    const CascadeSetup s = make_cascade_setup(cfg);
    const DataFamily fam = make_data(cfg, s.grid);
    const State init = fam.at(cfg.at("data").value("forward_eps", 0.1), s.grid, s.params.chemicals, s.params.prey);
    min_value = solve_time_dependent(s.grid, s.params, s.reaction, init, s.bc, s.dt, s.store_every).min_value;
  }
  r.pass = prey_zero && worst_const <= tol.constant_state_per_step && worst_mass <= tol.mass_per_step &&
           min_value >= tol.min_value;
  r.data = {{"prey_first_order_zero", prey_zero},
            {"constant_state_max_step_change", worst_const},
            {"mass_max_relative_step_change", worst_mass},
            {"min_field_value", min_value}};
  r.detail = std::string("v(I) ") + (prey_zero ? "exactly 0" : "nonzero") + ", constant state " + g4(worst_const) +
             "/step, mass " + g4(worst_mass) + "/step, min value " + g4(min_value);
  return r;
}

CriterionResult criterion_distinguishability(const Json& cfg, const AcceptanceTolerances& tol) {
  CriterionResult r;
  const Json c = with_grid(cfg, 64);
  const ForwardModel fm(c);
  const Inclusion base = fm.inclusion();
  Vec2 center(0.5, 0.5);
  if (const Circle* circ = base.as_circle()) center = circ->center;
  const MeasurementSet a = fm.simulate(Inclusion::circle(center, 0.15));
  const MeasurementSet b = fm.simulate(Inclusion::circle(center, 0.20));
  const MeasurementSet a2 = ForwardModel(c).simulate(Inclusion::circle(center, 0.15));
  const DiscrepancyReport distinct = discrepancy_report(a, b);
  const DiscrepancyReport same = discrepancy_report(a, a2);
  const PiecewiseReaction pr = make_reaction(c, base);
  const MultiIndex idx = parse_multi_index("u1u1", fm.params().chemicals, fm.params().prey);
  const double jump = pr.taylor_coefficient(0, idx, PiecewiseReaction::Side::kInterior)(center.x(), center.y()) -
                      pr.taylor_coefficient(0, idx, PiecewiseReaction::Side::kExterior)(center.x(), center.y());
  r.pass = distinct.sup > tol.distinct_min && same.sup <= tol.identical_max;
  r.data = {{"distinct_sup", distinct.sup}, {"distinct_l2", distinct.l2}, {"identical_sup", same.sup}, {"jump", jump}};
  r.detail = "r 0.15 vs 0.20: " + g4(distinct.sup) + ", identical: " + g4(same.sup) + ", jump " + g4(jump);
  return r;
}

CriterionResult criterion_shape(const Json& cfg, const AcceptanceTolerances& tol) {
  CriterionResult r;
  Json c = with_grid(cfg, 64);
  c["invert"]["noise"] = 0.0;
  const ForwardModel fm(c);
  const Circle* truth = fm.inclusion().as_circle();
  if (!truth) throw ConfigError("shape recovery benchmark needs a circle inclusion");
  InverseProblem ip;
  ip.observed = fm.simulate(fm.inclusion());
  ip.simulate = [&fm](const Inclusion& inc) { return fm.simulate(inc); };
  ip.kind = Inclusion::Kind::kCircle;
  ip.initial = require(c, "invert.initial").get<std::vector<double>>();
  ip.initial_step = c["invert"].value("initial_step", ip.initial_step);
  ip.max_forward_solves = tol.shape_budget;
  ip.restarts = c["invert"].value("restarts", ip.restarts);
  ip.seed = c.contains("seeds") ? c["seeds"].value("optimizer", 1ull) : 1ull;
  const ReconstructionResult res = reconstruct_inclusion(ip);
  const double h = fm.grid().h_max();
  const double center_err = std::hypot(res.parameters[0] - truth->center.x(), res.parameters[1] - truth->center.y());
  const double radius_err = std::abs(res.parameters[2] - truth->radius);
  bool monotone = true;
  for (std::size_t k = 1; k < res.history.size(); ++k) monotone = monotone && res.history[k] <= res.history[k - 1];
  r.pass = center_err < tol.shape_cells * h && radius_err < tol.shape_cells * h &&
           res.forward_solves <= tol.shape_budget && monotone;
  r.data = {{"parameters", res.parameters},
            {"center_error", center_err},
            {"radius_error", radius_err},
            {"h", h},
            {"misfit", res.misfit},
            {"forward_solves", res.forward_solves},
            {"history_monotone", monotone}};
  r.detail = "center error " + g4(center_err / h) + " cells, radius error " + g4(radius_err / h) + " cells, " +
             std::to_string(res.forward_solves) + " solves";
  return r;
}

CriterionResult criterion_coefficient(const Json& cfg, const AcceptanceTolerances& tol) {
  CriterionResult r;
  std::vector<double> hs, errs;
  bool within = true;
  Json runs = Json::array();
  const double final_time = require(cfg, "model.final_time").get<double>();
  for (int n : {32, 64, 128}) {
    Json c = with_grid(cfg, n);
    // time step proportional to h with a whole number of steps
    c["solver"]["dt"] = final_time / (n - 1);
    const CoefficientRun cr = run_coefficient_recovery(c, make_inclusion(require(c, "inclusion")));
    hs.push_back(cr.h);
    errs.push_back(cr.max_error);
    within = within && cr.max_error < tol.coefficient_cells * cr.h;
    double mean = 0.0;
    for (const auto& s : cr.samples) mean += s.value / static_cast<double>(cr.samples.size());
    runs.push_back({{"n", n}, {"h", cr.h}, {"max_error", cr.max_error}, {"mean", mean}});
  }
  const double slope = loglog_slope(hs, errs);
  r.pass = within && slope >= tol.coefficient_slope;
  r.data = {{"runs", runs}, {"slope", slope}};
  r.detail = "errors " + g4(errs[0]) + ", " + g4(errs[1]) + ", " + g4(errs[2]) + "; slope " + g4(slope);
  return r;
}

CriterionResult criterion_apex(const Json& cfg, int jobs) {
  CriterionResult r;
  std::vector<std::string> names;
  const auto specs = probe_specs(cfg, &names);
  bool ok = true;
  std::ostringstream d;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const Eigen::VectorXd apex = specs[c].corner.apex;
    struct Case {
      const char* label;
      std::function<double(const Eigen::VectorXd&)> f;
      ApexClass expected;
    };
    const std::vector<Case> cases = {
        {"constant", [](const Eigen::VectorXd&) { return 1.0; }, ApexClass::kNonzero},
        {"distance", [apex](const Eigen::VectorXd& x) { return (x - apex).norm(); }, ApexClass::kVanishing},
        {"zero", [](const Eigen::VectorXd&) { return 0.0; }, ApexClass::kIdenticallyZero},
        {"scaled_constant", [](const Eigen::VectorXd&) { return 3.7; }, ApexClass::kNonzero},
        {"scaled_distance", [apex](const Eigen::VectorXd& x) { return 3.7 * (x - apex).norm(); },
         ApexClass::kVanishing},
    };
    Json cj = Json::object();
    for (const auto& k : cases) {
      const ApexTestResult t = apex_vanishing_test(specs[c], k.f, 1.0, 0.1, jobs);
      const bool good = t.classification == k.expected;
      ok = ok && good;
      cj[k.label] = {{"class", apex_class_name(t.classification)},
                     {"spread", t.spread},
                     {"extra_decay", t.extra_decay},
                     {"pass", good}};
      if (!good) d << names[c] << "/" << k.label << " -> " << apex_class_name(t.classification) << "; ";
    }
    r.data[names[c]] = cj;
  }
  r.pass = ok;
  r.detail = ok ? std::to_string(specs.size()) + " corners, all classes correct" : d.str();
  return r;
}

std::string criterion_file(int id) {
  char name[32];
  std::snprintf(name, sizeof name, "criteria/c%02d.json", id);
  return name;
}

std::vector<CriterionResult> run_criteria(const Json& cfg, const AcceptanceTolerances& tol, const std::vector<int>& ids,
                                          int jobs, const std::optional<std::filesystem::path>& dir) {
  std::vector<CriterionResult> out;
  std::optional<ArtifactWriter> w;
  if (dir) w.emplace(*dir, config_hash(cfg));
  for (int id : ids) {
    const auto t0 = Clock::now();
    CriterionResult r;
    try {
      switch (id) {
        case 1: r = criterion_cgo_decay(cfg, tol, jobs); break;
        case 2: r = criterion_weighted(cfg, tol, jobs); break;
        case 3: r = criterion_laplace(tol); break;
        case 4: r = criterion_norms(cfg, jobs); break;
        case 5: r = criterion_linearization(cfg, tol, jobs); break;
        case 6: r = criterion_reductions(cfg, tol); break;
        case 7: r = criterion_distinguishability(cfg, tol); break;
        case 8: r = criterion_shape(cfg, tol); break;
        case 9: r = criterion_coefficient(cfg, tol); break;
        case 10: r = criterion_apex(cfg, jobs); break;
        default: throw ConfigError("unknown criterion " + std::to_string(id));
      }
    } catch (const Error& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
      r.data = {{"error", e.what()}};
    }
    r.id = id;
    r.name = criterion_name(id);
    r.seconds = seconds_since(t0);
    const double limits[] = {0.0,
                             tol.runtime_cgo,
                             tol.runtime_weighted,
                             tol.runtime_laplace,
                             tol.runtime_norms,
                             tol.runtime_linearize,
                             0.0,
                             tol.runtime_distinct,
                             tol.runtime_shape,
                             tol.runtime_coefficient,
                             tol.runtime_apex};
    const double limit = limits[id];
    if (limit > 0.0 && r.seconds >= limit) {
      r.pass = false;
      r.detail += " (runtime limit " + g4(limit) + " s exceeded)";
    }
    if (w) w->json(criterion_file(id), {{"id", id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"data", r.data}});
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

AcceptanceRun run_acceptance(const Json& cfg, const AcceptanceTolerances& tol, const std::set<int>& only, int jobs,
                             const std::optional<std::filesystem::path>& dir) {
  std::vector<int> ids;
  for (int id = 1; id <= 10; ++id)
    if (only.empty() || only.count(id)) ids.push_back(id);
  for (int id : only)
    if (id < 1 || id > 11) throw ConfigError("acceptance criteria are numbered 1 to 11");
  const bool determinism = only.empty() || only.count(11);

  const std::filesystem::path scratch = std::filesystem::temp_directory_path() /
                                        ("anomalykit_verify_" + std::to_string(::getpid()));
  const std::filesystem::path first_dir = dir ? *dir : scratch / "first";

  AcceptanceRun run;
  run.results = run_criteria(cfg, tol, ids, jobs, (dir || determinism) ? std::optional(first_dir) : std::nullopt);

  if (determinism) {
    const auto t0 = Clock::now();
    CriterionResult r;
    r.id = 11;
    r.name = criterion_name(11);
    const std::filesystem::path second_dir = scratch / "second";
    run_criteria(cfg, tol, ids, jobs, second_dir);
    std::vector<std::string> differing;
    for (int id : ids) {
      const std::string name = criterion_file(id);
      if (read_bytes(first_dir / name) != read_bytes(second_dir / name)) differing.push_back(name);
    }
    r.pass = differing.empty();
    r.data = {{"compared", ids.size()}, {"differing", differing}};
    r.detail = r.pass ? std::to_string(ids.size()) + " artifacts byte-identical across two runs"
                      : std::to_string(differing.size()) + " artifacts differ";
    r.seconds = seconds_since(t0);
    std::error_code ec;
    std::filesystem::remove_all(scratch, ec);
    run.results.push_back(std::move(r));
  }
  return run;
}

}  // namespace anomalykit
