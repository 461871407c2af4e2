#include "anomalykit/reaction.hpp"

#include "anomalykit/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace anomalykit {
namespace {

const Expression& zero_expression() {
  static const Expression zero = Expression::constant(0.0);
  return zero;
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

double ipow(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

}  // namespace

MultiIndex parse_multi_index(const std::string& key, int chemicals, int prey) {
  MultiIndex m(static_cast<std::size_t>(chemicals + prey), 0);
  std::size_t pos = 0;
  if (key.empty()) throw ConfigError("empty multi-index");
  while (pos < key.size()) {
    const char kind = key[pos];
    if (kind != 'u' && kind != 'v') throw ConfigError("multi-index '" + key + "': expected 'u' or 'v'");
    ++pos;
    std::size_t end = pos;
    while (end < key.size() && std::isdigit(static_cast<unsigned char>(key[end]))) ++end;
    if (end == pos) throw ConfigError("multi-index '" + key + "': missing variable number");
    const int idx = std::stoi(key.substr(pos, end - pos));
    pos = end;
    const int limit = kind == 'u' ? chemicals : prey;
    if (idx < 1 || idx > limit) throw ConfigError("multi-index '" + key + "': variable out of range");
    m[static_cast<std::size_t>(kind == 'u' ? idx - 1 : chemicals + idx - 1)] += 1;
  }
  return m;
}

std::string multi_index_name(const MultiIndex& m, int chemicals) {
  std::string out;
  for (std::size_t a = 0; a < m.size(); ++a) {
    const bool is_u = static_cast<int>(a) < chemicals;
    const int idx = is_u ? static_cast<int>(a) + 1 : static_cast<int>(a) - chemicals + 1;
    for (int p = 0; p < m[a]; ++p) out += (is_u ? "u" : "v") + std::to_string(idx);
  }
  return out.empty() ? "1" : out;
}

int multi_index_order(const MultiIndex& m) {
  int s = 0;
  for (int e : m) s += e;
  return s;
}

double multi_index_factorial(const MultiIndex& m) {
  double f = 1.0;
  for (int e : m) f *= factorial(e);
  return f;
}

double TimeProfile::operator()(double t) const {
  if (knots.empty()) return 1.0;
  if (t <= knots.front().first) return knots.front().second;
  if (t >= knots.back().first) return knots.back().second;
  const auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double v, const std::pair<double, double>& k) { return v < k.first; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double s = (t - a.first) / (b.first - a.first);
  return a.second + s * (b.second - a.second);
}

TaylorReaction::TaylorReaction(int chemicals, int prey, std::vector<double> base, int order)
    : chemicals_(chemicals), prey_(prey), order_(order), base_(std::move(base)) {
  if (chemicals < 1 || prey < 0) throw ConfigError("reaction needs at least one chemical");
  if (static_cast<int>(base_.size()) != chemicals) throw ConfigError("base state length must equal chemical count");
  for (double b : base_)
    if (!(b >= 0.0)) throw ConfigError("base state must be componentwise nonnegative");
  if (order < 2 || order > kMaxOrder) throw ConfigError("reaction order must lie in [2, 5]");
  terms_.resize(static_cast<std::size_t>(chemicals));
}

void TaylorReaction::check_index(int component, const MultiIndex& m) const {
  if (component < 0 || component >= chemicals_) throw ConfigError("reaction component out of range");
  if (static_cast<int>(m.size()) != chemicals_ + prey_) throw ConfigError("multi-index has wrong length");
  for (int e : m)
    if (e < 0) throw ConfigError("negative exponent in multi-index");
}

void TaylorReaction::set(int component, const MultiIndex& m, Expression coeff) {
  check_index(component, m);
  const int ord = multi_index_order(m);
  if (ord < 2) throw ConfigError("coefficients of order 0 or 1 must vanish at the base state");
  if (ord > order_) throw ConfigError("coefficient order exceeds truncation order");
  terms_[static_cast<std::size_t>(component)][m] = std::move(coeff);
}

void TaylorReaction::set_unchecked(int component, const MultiIndex& m, Expression coeff) {
  check_index(component, m);
  terms_[static_cast<std::size_t>(component)][m] = std::move(coeff);
}

const Expression* TaylorReaction::find(int component, const MultiIndex& m) const {
  check_index(component, m);
  const auto& map = terms_[static_cast<std::size_t>(component)];
  const auto it = map.find(m);
  return it == map.end() ? nullptr : &it->second;
}

const Expression& TaylorReaction::coefficient(int component, const MultiIndex& m) const {
  const int ord = multi_index_order(m);
  if (ord < 2) throw ConfigError("order-" + std::to_string(ord) + " coefficients vanish by admissibility");
  if (ord > order_) throw ConfigError("coefficient order exceeds truncation order");
  const Expression* e = find(component, m);
  return e ? *e : zero_expression();
}

double TaylorReaction::eval(int component, const Vec2& x, double t, const std::vector<double>& u,
                            const std::vector<double>& v) const {
  const double phi = profile(t);
  double sum = 0.0;
  for (const auto& [m, c] : terms_[static_cast<std::size_t>(component)]) {
    double mono = 1.0;
    for (int a = 0; a < chemicals_; ++a) mono *= ipow(u[static_cast<std::size_t>(a)] - base_[static_cast<std::size_t>(a)], m[static_cast<std::size_t>(a)]);
    for (int b = 0; b < prey_; ++b) mono *= ipow(v[static_cast<std::size_t>(b)], m[static_cast<std::size_t>(chemicals_ + b)]);
    sum += c(x.x(), x.y()) * mono / multi_index_factorial(m);
  }
  return phi * sum;
}

bool TaylorReaction::has_low_order_terms() const {
  for (const auto& map : terms_)
    for (const auto& [m, c] : map)
      if (multi_index_order(m) < 2) return true;
  return false;
}

PiecewiseReaction::PiecewiseReaction(TaylorReaction interior, TaylorReaction exterior, Inclusion inclusion)
    : interior_(std::move(interior)), exterior_(std::move(exterior)), inclusion_(std::move(inclusion)) {
  if (interior_.chemicals() != exterior_.chemicals() || interior_.prey() != exterior_.prey())
    throw ConfigError("interior and exterior reactions must have the same variables");
  if (interior_.base() != exterior_.base()) throw ConfigError("interior and exterior reactions must share the base state");
}

std::vector<double> PiecewiseReaction::eval(const Vec2& x, double t, const std::vector<double>& u,
                                            const std::vector<double>& v) const {
  const TaylorReaction& b = inclusion_.contains(x) && !inclusion_.empty() ? interior_ : exterior_;
  std::vector<double> out(static_cast<std::size_t>(chemicals()));
  for (int i = 0; i < chemicals(); ++i) out[static_cast<std::size_t>(i)] = b.eval(i, x, t, u, v);
  return out;
}

const Expression& PiecewiseReaction::taylor_coefficient(int component, const MultiIndex& m, Side side) const {
  return branch(side).coefficient(component, m);
}

AdmissibilityReport check_admissibility(const PiecewiseReaction& r, const std::optional<Grid>& g) {
  AdmissibilityReport rep;
  rep.truncation_order = r.order();
  rep.metadata = {"holder exponents: analytic data, not checked"};

  std::vector<Vec2> samples;
  const Inclusion& inc = r.inclusion();
  if (!inc.empty()) {
    if (g) {
      const IndicatorField ind = rasterize_inclusion(inc, *g);
      for (const auto& cell : ind.boundary_cells) samples.push_back(inc.project_to_boundary(g->node(cell.node)));
    } else {
      samples = inc.boundary_samples(128);
    }
  }
  rep.sample_count = samples.size();

  const int n = r.chemicals();
  const int m = r.prey();
  const std::vector<double> u0 = r.base();
  const std::vector<double> v0(static_cast<std::size_t>(m), 0.0);

  // probe points: interface samples plus a few fixed interior points
  std::vector<Vec2> probes = samples;
  probes.emplace_back(0.25, 0.25);
  probes.emplace_back(0.5, 0.5);
  probes.emplace_back(0.75, 0.6);

  rep.vanishes_at_base = !r.interior().has_low_order_terms() && !r.exterior().has_low_order_terms();
  rep.first_derivatives_vanish = true;
  constexpr double kStep = 1e-5;
  for (const auto side : {PiecewiseReaction::Side::kInterior, PiecewiseReaction::Side::kExterior}) {
    const TaylorReaction& b = r.branch(side);
    for (const auto& x : probes) {
      for (int i = 0; i < n; ++i) {
        if (b.eval(i, x, 0.0, u0, v0) != 0.0) rep.vanishes_at_base = false;
        for (int a = 0; a < n + m; ++a) {
          auto up = u0, um = u0;
          auto vp = v0, vm = v0;
          if (a < n) {
            up[static_cast<std::size_t>(a)] += kStep;
            um[static_cast<std::size_t>(a)] -= kStep;
          } else {
            vp[static_cast<std::size_t>(a - n)] += kStep;
            vm[static_cast<std::size_t>(a - n)] -= kStep;
          }
          const double d = (b.eval(i, x, 0.0, up, vp) - b.eval(i, x, 0.0, um, vm)) / (2 * kStep);
          if (!(std::abs(d) <= 1e-9)) rep.first_derivatives_vanish = false;
        }
      }
    }
  }

  rep.symmetric = true;
  for (int i = 0; i < n; ++i) {
    std::set<MultiIndex> keys;
    for (const auto& [mi, c] : r.interior().terms(i)) keys.insert(mi);
    for (const auto& [mi, c] : r.exterior().terms(i)) keys.insert(mi);
    for (const auto& mi : keys) {
      // the reversed derivative sequence must land on the same storage
      std::string name = multi_index_name(mi, n);
      std::vector<std::string> parts;
      for (std::size_t p = 0; p < name.size();) {
        std::size_t q = p + 1;
        while (q < name.size() && std::isdigit(static_cast<unsigned char>(name[q]))) ++q;
        parts.push_back(name.substr(p, q - p));
        p = q;
      }
      std::string reversed;
      for (auto it = parts.rbegin(); it != parts.rend(); ++it) reversed += *it;
      if (multi_index_order(mi) > 0 && parse_multi_index(reversed, n, m) != mi) rep.symmetric = false;

      double worst = 0.0;
      const Expression* ci = r.interior().find(i, mi);
      const Expression* ce = r.exterior().find(i, mi);
      for (const auto& x : samples) {
        const double a = ci ? (*ci)(x.x(), x.y()) : 0.0;
        const double b = ce ? (*ce)(x.x(), x.y()) : 0.0;
        worst = std::max(worst, std::abs(a - b));
      }
      rep.max_jump["G" + std::to_string(i + 1) + "_" + name] = worst;
      if (worst > 0.0) rep.jump_present = true;
    }
  }
  return rep;
}

double jump_magnitude(const PiecewiseReaction& r, const Vec2& p, int component, const MultiIndex& m,
                      double max_distance) {
  const Inclusion& inc = r.inclusion();
  if (inc.empty()) throw GeometryError("no interface to sample");
  if (std::abs(inc.signed_distance(p)) > max_distance)
    throw GeometryError("point is farther than " + std::to_string(max_distance) + " from the interface");
  const Vec2 q = inc.project_to_boundary(p);
  const Expression* ci = r.interior().find(component, m);
  const Expression* ce = r.exterior().find(component, m);
  const double a = ci ? (*ci)(q.x(), q.y()) : 0.0;
  const double b = ce ? (*ce)(q.x(), q.y()) : 0.0;
  return std::abs(a - b);
}

ReactionOnGrid::ReactionOnGrid(const PiecewiseReaction& r, const Grid& g, const IndicatorField& ind)
    : chemicals_(r.chemicals()),
      prey_(r.prey()),
      base_(r.base()),
      inner_profile_(r.interior().profile),
      outer_profile_(r.exterior().profile) {
  interior_.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) interior_[k] = ind.interior(k) ? 1 : 0;
  terms_.resize(static_cast<std::size_t>(chemicals_));
  for (int i = 0; i < chemicals_; ++i) {
    std::set<MultiIndex> keys;
    for (const auto& [mi, c] : r.interior().terms(i)) keys.insert(mi);
    for (const auto& [mi, c] : r.exterior().terms(i)) keys.insert(mi);
    for (const auto& mi : keys) {
      Term t;
      for (std::size_t a = 0; a < mi.size(); ++a)
        if (mi[a] > 0) t.powers.emplace_back(static_cast<int>(a), mi[a]);
      t.order = multi_index_order(mi);
      t.coeff.assign(g.size(), 0.0);
      const Expression* ci = r.interior().find(i, mi);
      const Expression* ce = r.exterior().find(i, mi);
      const double fact = multi_index_factorial(mi);
      bool nonzero = false;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const Expression* c = interior_[k] ? ci : ce;
        if (!c) continue;
        const Vec2 x = g.node(k);
        t.coeff[k] = (*c)(x.x(), x.y()) / fact;
        nonzero |= t.coeff[k] != 0.0;
      }
      if (nonzero) terms_[static_cast<std::size_t>(i)].push_back(std::move(t));
    }
  }
}

bool ReactionOnGrid::empty() const {
  for (const auto& list : terms_)
    if (!list.empty()) return false;
  return true;
}

double ReactionOnGrid::eval(int component, std::size_t node, double t, const double* w) const {
  const auto& list = terms_[static_cast<std::size_t>(component)];
  if (list.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& term : list) {
    double mono = term.coeff[node];
    if (mono == 0.0) continue;
    for (const auto& [a, p] : term.powers) {
      const double shift = a < chemicals_ ? base_[static_cast<std::size_t>(a)] : 0.0;
      mono *= ipow(w[a] - shift, p);
    }
    sum += mono;
  }
  const double phi = interior_[node] ? inner_profile_(t) : outer_profile_(t);
  return phi * sum;
}

double ReactionOnGrid::series_derivative(int component, std::size_t node, double t,
                                         const std::vector<std::vector<double>>& series, int l) const {
  const auto& list = terms_[static_cast<std::size_t>(component)];
  if (list.empty() || l < 1) return 0.0;
  double sum = 0.0;
  double poly[8];
  double next[8];
  for (const auto& term : list) {
    if (term.order > l) continue;
    const double c = term.coeff[node];
    if (c == 0.0) continue;
    std::fill(poly, poly + l + 1, 0.0);
    poly[0] = 1.0;
    for (const auto& [a, p] : term.powers) {
      const auto& s = series[static_cast<std::size_t>(a)];
      for (int rep = 0; rep < p; ++rep) {
        std::fill(next, next + l + 1, 0.0);
        for (int d = 0; d <= l; ++d) {
          if (poly[d] == 0.0) continue;
          for (int k = 1; d + k <= l; ++k) next[d + k] += poly[d] * s[static_cast<std::size_t>(k - 1)] / factorial(k);
        }
        std::copy(next, next + l + 1, poly);
      }
    }
    sum += c * poly[l];
  }
  const double phi = interior_[node] ? inner_profile_(t) : outer_profile_(t);
  return phi * sum * factorial(l);
}

}  // namespace anomalykit
