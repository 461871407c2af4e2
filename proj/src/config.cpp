#include "anomalykit/config.hpp"

#include "anomalykit/error.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <cctype>
#include <sstream>

namespace anomalykit {
namespace {

const char* const kDefaultConfig = R"json({
  "format_version": 1,
  "mode": "parabolic",
  "boundary": "neumann",
  "grid": {"nx": 64, "ny": 64, "bounds": [0.0, 1.0, 0.0, 1.0]},
  "model": {
    "chemicals": 2,
    "prey": 1,
    "d": [1.0, 0.8],
    "delta": [0.5],
    "cross": [[0.1], [0.0]],
    "taxis": [[1], [0]],
    "final_time": 0.05
  },
  "reaction": {
    "order": 3,
    "base": [1.0, 0.5],
    "time_profile": [],
    "exterior": {
      "u1": {"u1u1": 0.5, "u1u2": 0.2, "u1v1": -0.3},
      "u2": {"u2u2": -0.4, "u1u2": 0.1}
    },
    "interior": {
      "u1": {"u1u1": 1.0, "u1u2": 0.2, "u1v1": -0.3},
      "u2": {"u2u2": -0.4, "u1u2": 0.1}
    }
  },
  "inclusion": {"kind": "circle", "center": [0.55, 0.45], "radius": 0.18},
  "data": {
    "f1": ["1", "0.5 + 0.25*cos(pi*x1)*cos(pi*x2)"],
    "f2": ["0.5*x1", "0"],
    "g1": ["0.5 + 0.25*sin(pi*x2)"],
    "g2": [],
    "ladder": [0.1, 0.05, 0.025, 0.0125],
    "forward_eps": 0.1
  },
  "solver": {"dt": 0.001, "store_every": 5, "newton_tol": 1e-10, "max_newton": 200, "gmres_restart": 30},
  "linearize": {"max_order": 2},
  "probe": {
    "tau_ladder": [20, 40, 80, 160],
    "alpha": 1.0,
    "corners": [
      {"name": "sector_pi12", "kind": "sector", "apex": [0.0, 0.0], "axis": [1.0, 0.0], "half_angle": 0.2617993877991494, "radius": 0.6},
      {"name": "sector_pi6", "kind": "sector", "apex": [0.0, 0.0], "axis": [1.0, 0.0], "half_angle": 0.5235987755982988, "radius": 0.6},
      {"name": "sector_pi4", "kind": "sector", "apex": [0.0, 0.0], "axis": [1.0, 0.0], "half_angle": 0.7853981633974483, "radius": 0.6},
      {"name": "octant", "kind": "edges", "apex": [0.0, 0.0, 0.0], "edges": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "radius": 0.7}
    ]
  },
  "invert": {
    "candidate": "circle",
    "initial": [0.5, 0.5, 0.15],
    "initial_step": 0.05,
    "max_forward_solves": 300,
    "restarts": 3,
    "tolerance": 1e-8,
    "norm": "l2",
    "noise": 0.0,
    "coefficient": {"component": "u1", "index": "u1u1", "samples": 32, "offset_cells": 1.0, "time_fraction": 0.5}
  },
  "seeds": {"noise": 1, "optimizer": 1},
  "output": {"dir": "out"}
})json";

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string item;
  while (std::getline(ss, item, '.')) {
    if (item.empty()) throw ConfigError("empty segment in config path '" + path + "'");
    parts.push_back(item);
  }
  if (parts.empty()) throw ConfigError("empty config path");
  return parts;
}

const Json* find_path(const Json& cfg, const std::string& path) {
  const Json* cur = &cfg;
  for (const std::string& key : split_path(path)) {
    if (cur->is_object()) {
      auto it = cur->find(key);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else if (cur->is_array() && !key.empty() && std::isdigit(static_cast<unsigned char>(key[0]))) {
      const std::size_t idx = std::stoul(key);
      if (idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else {
      return nullptr;
    }
  }
  return cur;
}

template <class T>
T get_as(const Json& cfg, const std::string& path) {
  const Json& j = require(cfg, path);
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + path + "' has the wrong type");
  }
}

template <class T>
T get_or(const Json& cfg, const std::string& path, T fallback) {
  const Json* j = find_path(cfg, path);
  if (!j) return fallback;
  try {
    return j->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + path + "' has the wrong type");
  }
}

Expression expression_of(const Json& j, const std::string& where) {
  if (j.is_number()) return Expression::constant(j.get<double>());
  if (j.is_string()) {
    try {
      return Expression::parse(j.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  throw ConfigError(where + " must be a number or an expression string");
}

std::vector<Field> sample_fields(const Json& cfg, const std::string& path, const Grid& g) {
  std::vector<Field> out;
  const Json* list = find_path(cfg, path);
  if (!list) return out;
  if (!list->is_array()) throw ConfigError("config key '" + path + "' must be a list");
  for (std::size_t a = 0; a < list->size(); ++a) {
    const Expression e = expression_of((*list)[a], path + "." + std::to_string(a));
    Field f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec2 p = g.node(k);
      f[k] = e(p.x(), p.y());
    }
    out.push_back(std::move(f));
  }
  return out;
}

int component_index(const std::string& key, int chemicals, const std::string& where) {
  if (key.size() < 2 || key[0] != 'u') throw ConfigError(where + ": reaction components are named u1..uN");
  int c = 0;
  try {
    c = std::stoi(key.substr(1));
  } catch (const std::exception&) {
    throw ConfigError(where + ": bad component name '" + key + "'");
  }
  if (c < 1 || c > chemicals) throw ConfigError(where + ": component '" + key + "' out of range");
  return c - 1;
}

TaylorReaction make_branch(const Json& cfg, const std::string& side, int nc, int np, const std::vector<double>& base,
                           int order) {
  TaylorReaction r(nc, np, base, order);
  const Json& branch = require(cfg, "reaction." + side);
  if (!branch.is_object()) throw ConfigError("config key 'reaction." + side + "' must be an object");
  for (const auto& [comp, table] : branch.items()) {
    const std::string where = "reaction." + side + "." + comp;
    const int c = component_index(comp, nc, where);
    if (!table.is_object()) throw ConfigError("config key '" + where + "' must be an object");
    for (const auto& [key, value] : table.items()) {
      const MultiIndex m = parse_multi_index(key, nc, np);
      r.set(c, m, expression_of(value, where + "." + key));
    }
  }
  const Json* prof = find_path(cfg, "reaction.time_profile");
  if (prof && !prof->is_null()) {
    for (const auto& knot : *prof) {
      if (!knot.is_array() || knot.size() != 2) throw ConfigError("reaction.time_profile holds [t, value] pairs");
      r.profile.knots.emplace_back(knot[0].get<double>(), knot[1].get<double>());
    }
  }
  return r;
}

Eigen::VectorXd to_vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a nonempty list of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return v;
}

}  // namespace

Json default_config() { return Json::parse(kDefaultConfig); }

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

void apply_override(Json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json* cur = &cfg;
  for (const std::string& part : split_path(key)) {
    if (cur->is_array()) {
      if (part.empty() || !std::isdigit(static_cast<unsigned char>(part[0])))
        throw ConfigError("override '" + key + "' indexes a list with a non-number");
      const std::size_t idx = std::stoul(part);
      if (idx >= cur->size()) throw ConfigError("override '" + key + "' is out of range");
      cur = &(*cur)[idx];
    } else {
      if (!cur->is_object() && !cur->is_null()) throw ConfigError("override '" + key + "' descends into a scalar");
      cur = &(*cur)[part];
    }
  }
  *cur = std::move(value);
}

std::string config_hash(const Json& cfg) {
  const std::string text = cfg.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const Json& require(const Json& cfg, const std::string& path) {
  const Json* j = find_path(cfg, path);
  if (!j || j->is_null()) throw ConfigError("missing config key '" + path + "'");
  return *j;
}

Grid make_grid(const Json& cfg) {
  const int nx = get_as<int>(cfg, "grid.nx");
  const int ny = get_as<int>(cfg, "grid.ny");
  const auto b = get_or<std::vector<double>>(cfg, "grid.bounds", {0.0, 1.0, 0.0, 1.0});
  if (b.size() != 4) throw ConfigError("grid.bounds is [x0, x1, y0, y1]");
  return build_grid(nx, ny, Rect{b[0], b[1], b[2], b[3]});
}

ModelParams make_params(const Json& cfg) {
  ModelParams p;
  p.chemicals = get_as<int>(cfg, "model.chemicals");
  p.prey = get_or<int>(cfg, "model.prey", 0);
  p.d = get_as<std::vector<double>>(cfg, "model.d");
  p.delta = get_or<std::vector<double>>(cfg, "model.delta", {});
  p.cross = get_or<std::vector<std::vector<double>>>(cfg, "model.cross", {});
  p.taxis = get_or<std::vector<std::vector<int>>>(cfg, "model.taxis", {});
  p.final_time = get_as<double>(cfg, "model.final_time");
  p.validate();
  return p;
}

Inclusion make_inclusion(const Json& spec) {
  const std::string kind = get_as<std::string>(spec, "kind");
  if (kind == "circle") {
    const auto c = get_as<std::vector<double>>(spec, "center");
    if (c.size() != 2) throw ConfigError("inclusion.center is [x, y]");
    return Inclusion::circle({c[0], c[1]}, get_as<double>(spec, "radius"));
  }
  if (kind == "polygon") {
    const auto v = get_as<std::vector<std::vector<double>>>(spec, "vertices");
    std::vector<Vec2> pts;
    for (const auto& p : v) {
      if (p.size() != 2) throw ConfigError("inclusion.vertices holds [x, y] pairs");
      pts.emplace_back(p[0], p[1]);
    }
    return Inclusion::polygon(std::move(pts));
  }
  if (kind == "star") {
    const auto c = get_as<std::vector<double>>(spec, "center");
    if (c.size() != 2) throw ConfigError("inclusion.center is [x, y]");
    return Inclusion::star({c[0], c[1]}, get_as<std::vector<double>>(spec, "fourier"));
  }
  throw ConfigError("unknown inclusion.kind '" + kind + "'");
}

PiecewiseReaction make_reaction(const Json& cfg, const Inclusion& inc) {
  const int nc = get_as<int>(cfg, "model.chemicals");
  const int np = get_or<int>(cfg, "model.prey", 0);
  const int order = get_or<int>(cfg, "reaction.order", TaylorReaction::kDefaultOrder);
  const auto base = get_as<std::vector<double>>(cfg, "reaction.base");
  return PiecewiseReaction(make_branch(cfg, "interior", nc, np, base, order),
                           make_branch(cfg, "exterior", nc, np, base, order), inc);
}

BoundaryKind make_boundary(const Json& cfg) {
  const std::string b = get_or<std::string>(cfg, "boundary", "neumann");
  if (b == "neumann") return BoundaryKind::kNeumann;
  if (b == "dirichlet") return BoundaryKind::kDirichlet;
  throw ConfigError("boundary must be 'neumann' or 'dirichlet'");
}

bool is_stationary(const Json& cfg) {
  const std::string m = get_or<std::string>(cfg, "mode", "parabolic");
  if (m == "parabolic") return false;
  if (m == "stationary") return true;
  throw ConfigError("mode must be 'parabolic' or 'stationary'");
}

DataFamily make_data(const Json& cfg, const Grid& g) {
  DataFamily fam;
  fam.base = get_as<std::vector<double>>(cfg, "reaction.base");
  fam.f1 = sample_fields(cfg, "data.f1", g);
  fam.f2 = sample_fields(cfg, "data.f2", g);
  fam.g1 = sample_fields(cfg, "data.g1", g);
  fam.g2 = sample_fields(cfg, "data.g2", g);
  fam.ladder = get_or<std::vector<double>>(cfg, "data.ladder", fam.ladder);
  fam.validate(g, get_as<int>(cfg, "model.chemicals"), get_or<int>(cfg, "model.prey", 0));
  return fam;
}

NewtonOptions make_newton(const Json& cfg) {
  NewtonOptions o;
  o.tolerance = get_or<double>(cfg, "solver.newton_tol", o.tolerance);
  o.max_iterations = get_or<int>(cfg, "solver.max_newton", o.max_iterations);
  o.restart = get_or<int>(cfg, "solver.gmres_restart", o.restart);
  return o;
}

CascadeSetup make_cascade_setup(const Json& cfg) {
  CascadeSetup s;
  s.grid = make_grid(cfg);
  s.params = make_params(cfg);
  const Inclusion inc = make_inclusion(require(cfg, "inclusion"));
  inc.require_inside(s.grid);
  const PiecewiseReaction r = make_reaction(cfg, inc);
  s.reaction = ReactionOnGrid(r, s.grid, rasterize_inclusion(inc, s.grid));
  s.bc = make_boundary(cfg);
  s.stationary = is_stationary(cfg);
  s.dt = get_as<double>(cfg, "solver.dt");
  s.store_every = get_or<int>(cfg, "solver.store_every", 1);
  if (!(s.dt > 0.0)) throw ConfigError("solver.dt must be positive");
  if (s.store_every < 1) throw ConfigError("solver.store_every must be at least 1");
  return s;
}

std::vector<NamedCorner> make_corners(const Json& cfg) {
  std::vector<NamedCorner> out;
  const Json& list = require(cfg, "probe.corners");
  if (!list.is_array() || list.empty()) throw ConfigError("probe.corners must be a nonempty list");
  for (std::size_t k = 0; k < list.size(); ++k) {
    const Json& c = list[k];
    const std::string where = "probe.corners." + std::to_string(k);
    NamedCorner nc;
    nc.name = get_or<std::string>(c, "name", "corner" + std::to_string(k));
    const std::string kind = get_as<std::string>(c, "kind");
    const Eigen::VectorXd apex = to_vector(require(c, "apex"), where + ".apex");
    const double radius = get_as<double>(c, "radius");
    if (kind == "sector") {
      if (apex.size() != 2) throw ConfigError(where + ": sector apex must be 2-D");
      const Eigen::VectorXd axis = to_vector(require(c, "axis"), where + ".axis");
      if (axis.size() != 2) throw ConfigError(where + ": sector axis must be 2-D");
      nc.corner = TruncatedCorner::sector_2d({apex[0], apex[1]}, {axis[0], axis[1]}, get_as<double>(c, "half_angle"),
                                             radius);
    } else if (kind == "edges") {
      std::vector<Eigen::VectorXd> edges;
      for (const auto& e : require(c, "edges")) edges.push_back(to_vector(e, where + ".edges"));
      nc.corner = TruncatedCorner::from_edges(apex, std::move(edges), radius);
    } else {
      throw ConfigError(where + ": corner kind must be 'sector' or 'edges'");
    }
    out.push_back(std::move(nc));
  }
  return out;
}

std::vector<double> make_tau_ladder(const Json& cfg) {
  auto t = get_as<std::vector<double>>(cfg, "probe.tau_ladder");
  if (t.size() < 4) throw ConfigError("probe.tau_ladder needs at least 4 entries");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(t[k] > 0.0)) throw ConfigError("probe.tau_ladder entries must be positive");
    if (k > 0 && !(t[k] > t[k - 1])) throw ConfigError("probe.tau_ladder must be increasing");
  }
  return t;
}

}  // namespace anomalykit
