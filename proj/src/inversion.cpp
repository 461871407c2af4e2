#include "anomalykit/inversion.hpp"

#include "anomalykit/error.hpp"
#include "anomalykit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace anomalykit {

DiscrepancyReport discrepancy_report(const MeasurementSet& a, const MeasurementSet& b) {
  if (!a.same_layout(b)) throw LayoutMismatch("measurement sets have different trace layouts");
  DiscrepancyReport r;
  double sq = 0.0;
  auto add = [&](const Field& x, const Field& y) {
    if (x.size() != y.size()) throw LayoutMismatch("measurement field sizes differ");
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = std::abs(x[k] - y[k]);
      r.sup = std::max(r.sup, d);
      sq += d * d;
    }
    r.samples += x.size();
  };
  for (std::size_t t = 0; t < a.traces.size(); ++t) {
    if (a.traces[t].size() != b.traces[t].size()) throw LayoutMismatch("trace field counts differ");
    for (std::size_t f = 0; f < a.traces[t].size(); ++f) add(a.traces[t][f], b.traces[t][f]);
  }
  for (std::size_t f = 0; f < a.snapshot.size(); ++f) add(a.snapshot[f], b.snapshot[f]);
  for (std::size_t f = 0; f < a.neumann.size(); ++f) add(a.neumann[f], b.neumann[f]);
  r.l2 = r.samples ? std::sqrt(sq / static_cast<double>(r.samples)) : 0.0;
  return r;
}

MeasurementSet add_noise(const MeasurementSet& m, double level, unsigned long long seed) {
  if (!(level >= 0.0)) throw ConfigError("noise level must be nonnegative");
  MeasurementSet out = m;
  if (level == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto perturb = [&](Field& f) {
    for (double& x : f) x *= 1.0 + level * normal(rng);
  };
  for (auto& row : out.traces)
    for (auto& f : row) perturb(f);
  for (auto& f : out.snapshot) perturb(f);
  for (auto& f : out.neumann) perturb(f);
  return out;
}

ReconstructionResult reconstruct_inclusion(const InverseProblem& ip) {
  if (!ip.simulate) throw ConfigError("inverse problem has no forward model");
  const std::size_t dim = ip.initial.size();
  if (dim == 0 || dim > 12) throw ConfigError("candidate parametrization must have 1 to 12 parameters");
  if (ip.restarts < 1) throw ConfigError("at least one restart is required");
  if (ip.max_forward_solves < static_cast<int>(dim) + 1) throw ConfigError("forward-solve budget is too small");

  constexpr double kPenalty = 1e6;
  ReconstructionResult res;
  res.kind = ip.kind;
  res.seed = ip.seed;
  res.parameters = ip.initial;
  res.misfit = std::numeric_limits<double>::infinity();
  int evaluations = 0;

  auto objective = [&](const std::vector<double>& p) {
    ++evaluations;
    try {
      const Inclusion inc = Inclusion::from_parameters(ip.kind, p);
      const MeasurementSet sim = ip.simulate(inc);
      ++res.forward_solves;
      const DiscrepancyReport d = discrepancy_report(sim, ip.observed);
      const double f = ip.norm == MisfitNorm::kSup ? d.sup : d.l2;
      if (f < res.misfit) {
        res.misfit = f;
        res.parameters = p;
      }
      return f;
    } catch (const LayoutMismatch&) {
      throw;
    } catch (const Error&) {
      return kPenalty;
    }
  };

  std::mt19937_64 rng(ip.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int per_restart = ip.max_forward_solves / ip.restarts;
  const int eval_cap = 4 * ip.max_forward_solves;

  for (int restart = 0; restart < ip.restarts; ++restart) {
    if (res.misfit == 0.0) break;
    const int budget_end = std::min(ip.max_forward_solves, res.forward_solves + per_restart);
    const double step = ip.initial_step / std::pow(2.0, restart);
    std::vector<double> start = restart == 0 ? ip.initial : res.parameters;
    if (restart > 0)
      for (double& x : start) x += 0.5 * step * normal(rng);
    ++res.restarts_run;

    std::vector<std::vector<double>> simplex(dim + 1, start);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step;
    std::vector<double> fval(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fval[i] = objective(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    while (res.forward_solves < budget_end && evaluations < eval_cap) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fval[a] < fval[b]; });
      {
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (std::size_t i : order) {
          s2.push_back(simplex[i]);
          f2.push_back(fval[i]);
        }
        simplex.swap(s2);
        fval.swap(f2);
      }
      res.history.push_back(res.misfit);

      double diameter = 0.0;
      for (std::size_t i = 1; i <= dim; ++i)
        for (std::size_t k = 0; k < dim; ++k) diameter = std::max(diameter, std::abs(simplex[i][k] - simplex[0][k]));
      if (diameter < 1e-6 || (fval[dim] - fval[0] <= 0.0 && fval[0] <= ip.tolerance)) break;

      std::vector<double> centroid(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k] / static_cast<double>(dim);
      auto blend = [&](double t) {
        std::vector<double> p(dim);
        for (std::size_t k = 0; k < dim; ++k) p[k] = centroid[k] + t * (simplex[dim][k] - centroid[k]);
        return p;
      };

      const std::vector<double> xr = blend(-1.0);
      const double fr = objective(xr);
      if (fr < fval[0]) {
        const std::vector<double> xe = blend(-2.0);
        const double fe = objective(xe);
        if (fe < fr) {
          simplex[dim] = xe;
          fval[dim] = fe;
        } else {
          simplex[dim] = xr;
          fval[dim] = fr;
        }
        continue;
      }
      if (fr < fval[dim - 1]) {
        simplex[dim] = xr;
        fval[dim] = fr;
        continue;
      }
      const bool outside = fr < fval[dim];
      const std::vector<double> xc = blend(outside ? -0.5 : 0.5);
      const double fc = objective(xc);
      if (fc < (outside ? fr : fval[dim])) {
        simplex[dim] = xc;
        fval[dim] = fc;
        continue;
      }
      for (std::size_t i = 1; i <= dim; ++i) {
        for (std::size_t k = 0; k < dim; ++k) simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
        fval[i] = objective(simplex[i]);
      }
    }
  }
  res.history.push_back(res.misfit);
  res.stagnated = !(res.misfit <= std::max(ip.tolerance, 2.0 * ip.noise_level));
  return res;
}

std::vector<CoefficientSample> recover_boundary_coefficient(const CascadeSetup& setup, const CascadeSolution& cascade,
                                                            const Inclusion& estimate, int component,
                                                            const MultiIndex& index, const CoefficientOptions& opt) {
  if (setup.stationary || cascade.stationary) throw ConfigError("coefficient recovery uses the time-dependent cascade");
  if (cascade.max_order() < 2) throw ConfigError("coefficient recovery needs the second-order cascade");
  const Grid& g = setup.grid;
  const int nc = setup.params.chemicals;
  if (component < 0 || component >= nc) throw ConfigError("component out of range");
  if (multi_index_order(index) != 2) throw ConfigError("only second-order coefficients are recovered");
  for (std::size_t a = static_cast<std::size_t>(nc); a < index.size(); ++a)
    if (index[a] != 0) throw ConfigError("prey factors are not supported by the recovery identity");

  const auto& first = cascade.orders[0];
  const auto& second = cascade.orders[1];
  const std::size_t levels = second.size();
  if (levels < 3) throw ConfigError("coefficient recovery needs at least two time steps");
  const double dt = cascade.dt;
  const double t_end = second.back().time;
  const auto ci = static_cast<std::size_t>(component);
  const double diff = setup.params.d[ci];

  // product of first-order factors times 2!/alpha!
  auto factor = [&](const MultiIndex& m, const State& s, std::size_t k) {
    double prod = 2.0 / multi_index_factorial(m);
    for (std::size_t a = 0; a < m.size(); ++a) {
      const Field& f = a < static_cast<std::size_t>(nc) ? s.u[a] : s.v[a - static_cast<std::size_t>(nc)];
      for (int p = 0; p < m[a]; ++p) prod *= f[k];
    }
    return prod;
  };

  std::vector<CoefficientSample> out;
  const std::vector<Vec2> pts = estimate.boundary_samples(opt.samples);
  const double offset = (opt.outside ? 1.0 : -1.0) * opt.offset_cells * g.h_max();
  Field lap;
  std::vector<std::size_t> nodes;
  for (const Vec2& p : pts) nodes.push_back(g.nearest_node(p + offset * estimate.normal(p)));

  std::vector<double> sums(pts.size(), 0.0);
  int used = 0;
  for (std::size_t n = 1; n + 1 < levels; ++n) {
    if (second[n].time < opt.time_fraction * t_end) continue;
    ++used;
    apply_laplacian(g, second[n].u[ci], lap, setup.bc);
    for (std::size_t s = 0; s < pts.size(); ++s) {
      const std::size_t k = nodes[s];
      double r = (second[n + 1].u[ci][k] - second[n - 1].u[ci][k]) / (2.0 * dt) - diff * lap[k];
      for (const auto& [m, c] : opt.known) {
        if (m == index) continue;
        r -= c * factor(m, first[n], k);
      }
      for (int a = 0; a < nc; ++a) {
        if (index[static_cast<std::size_t>(a)] == 0) continue;
        if (std::abs(first[n].u[static_cast<std::size_t>(a)][k]) < 1e-6)
          throw ConfigError("first-order factor u" + std::to_string(a + 1) + " is below 1e-6 at a sample point");
      }
      sums[s] += r / factor(index, first[n], k);
    }
  }
  if (used == 0) throw ConfigError("no time levels selected for coefficient recovery");
  for (std::size_t s = 0; s < pts.size(); ++s) out.push_back({pts[s], nodes[s], sums[s] / used});
  return out;
}

std::string apex_class_name(ApexClass c) {
  switch (c) {
    case ApexClass::kNonzero: return "nonzero";
    case ApexClass::kVanishing: return "vanishing";
    case ApexClass::kIdenticallyZero: return "zero";
    case ApexClass::kIndeterminate: return "indeterminate";
  }
  return "indeterminate";
}

ApexTestResult apex_vanishing_test(const ProbeSpec& spec, const std::function<double(const Eigen::VectorXd&)>& residual,
                                   double holder_alpha, double decay_slack, int jobs) {
  const std::size_t n = spec.tau_ladder.size();
  if (n < 4) throw ConfigError("apex test needs a ladder of at least 4 points");
  ApexTestResult res;
  res.tau = spec.tau_ladder;
  res.integrals.resize(n);
  parallel_for(static_cast<int>(n), jobs, [&](int k) {
    res.integrals[static_cast<std::size_t>(k)] =
        corner_integral_weighted(spec, spec.tau_ladder[static_cast<std::size_t>(k)], residual);
  });
  const double dim = spec.corner.dim;
  if (std::all_of(res.integrals.begin(), res.integrals.end(), [](const Complex& z) { return z == Complex(0.0, 0.0); })) {
    res.classification = ApexClass::kIdenticallyZero;
    res.scaled.assign(n, 0.0);
    return res;
  }
  for (std::size_t k = 0; k < n; ++k) res.scaled.push_back(std::abs(res.integrals[k]) * std::pow(res.tau[k], dim));
  const std::size_t top = n / 2;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, mean = 0.0;
  for (std::size_t k = top; k < n; ++k) {
    lo = std::min(lo, res.scaled[k]);
    hi = std::max(hi, res.scaled[k]);
    mean += res.scaled[k];
  }
  mean /= static_cast<double>(n - top);
  res.constant = mean;
  res.spread = mean > 0 ? (hi - lo) / mean : std::numeric_limits<double>::infinity();
  try {
    const AsymptoticFit fit = asymptotic_fit(res.tau, res.integrals);
    res.exponent = fit.exponent;
    res.extra_decay = -fit.exponent - dim;
  } catch (const Error&) {
    res.classification = ApexClass::kIndeterminate;
    return res;
  }
  if (res.spread < 0.2) {
    res.classification = ApexClass::kNonzero;
  } else if (res.extra_decay >= holder_alpha - decay_slack) {
    res.classification = ApexClass::kVanishing;
  } else {
    res.classification = ApexClass::kIndeterminate;
  }
  return res;
}

}  // namespace anomalykit
