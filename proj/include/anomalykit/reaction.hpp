/// @file reaction.hpp
/// @brief Reaction terms as centred truncated Taylor series with an
/// interior and an exterior branch.
#pragma once

#include "anomalykit/expression.hpp"
#include "anomalykit/geometry.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace anomalykit {

/// Exponents over the variables (u_1..u_N, v_1..v_M). Permutations of the
/// same derivative sequence map to one canonical exponent vector.
using MultiIndex = std::vector<int>;

/// Parses "u1u2", "u1v1", "u1u1u2" into exponents; `chemicals`/`prey`
/// fix the vector length.
MultiIndex parse_multi_index(const std::string& key, int chemicals, int prey);
std::string multi_index_name(const MultiIndex& m, int chemicals);
int multi_index_order(const MultiIndex& m);
/// Product of factorials of the exponents.
double multi_index_factorial(const MultiIndex& m);

/// Piecewise-linear time factor; empty knots mean phi = 1.
struct TimeProfile {
  std::vector<std::pair<double, double>> knots;
  double operator()(double t) const;
};

class TaylorReaction {
 public:
  static constexpr int kDefaultOrder = 3;
  static constexpr int kMaxOrder = 5;

  TaylorReaction() = default;
  TaylorReaction(int chemicals, int prey, std::vector<double> base, int order = kDefaultOrder);

  int chemicals() const { return chemicals_; }
  int prey() const { return prey_; }
  int order() const { return order_; }
  const std::vector<double>& base() const { return base_; }

  TimeProfile profile;

  /// Stores the coefficient of `m` for equation `component`. Rejects
  /// orders outside [2, order()].
  void set(int component, const MultiIndex& m, Expression coeff);
  /// Test hook: stores without the order check, so inadmissible reactions
  /// can be built on purpose.
  void set_unchecked(int component, const MultiIndex& m, Expression coeff);

  /// Reference to the stored coefficient, or nullptr if absent.
  const Expression* find(int component, const MultiIndex& m) const;
  /// Throws ConfigError for orders outside [2, order()]; returns a shared
  /// zero expression when the term is absent.
  const Expression& coefficient(int component, const MultiIndex& m) const;

  using TermMap = std::map<MultiIndex, Expression>;
  const TermMap& terms(int component) const { return terms_[static_cast<std::size_t>(component)]; }

  /// sum_alpha c_alpha(x) phi(t) (w - w0)^alpha / alpha! for one component.
  double eval(int component, const Vec2& x, double t, const std::vector<double>& u,
              const std::vector<double>& v) const;

  bool has_low_order_terms() const;

 private:
  void check_index(int component, const MultiIndex& m) const;

  int chemicals_ = 0;
  int prey_ = 0;
  int order_ = kDefaultOrder;
  std::vector<double> base_;
  std::vector<TermMap> terms_;
};

class PiecewiseReaction {
 public:
  PiecewiseReaction() = default;
  /// Both branches must share sizes and base state.
  PiecewiseReaction(TaylorReaction interior, TaylorReaction exterior, Inclusion inclusion);

  enum class Side { kInterior, kExterior };

  const TaylorReaction& interior() const { return interior_; }
  const TaylorReaction& exterior() const { return exterior_; }
  const TaylorReaction& branch(Side s) const { return s == Side::kInterior ? interior_ : exterior_; }
  const Inclusion& inclusion() const { return inclusion_; }
  int chemicals() const { return exterior_.chemicals(); }
  int prey() const { return exterior_.prey(); }
  int order() const { return std::max(interior_.order(), exterior_.order()); }
  const std::vector<double>& base() const { return exterior_.base(); }

  /// Branch chosen by point membership in the inclusion.
  std::vector<double> eval(const Vec2& x, double t, const std::vector<double>& u,
                           const std::vector<double>& v) const;

  const Expression& taylor_coefficient(int component, const MultiIndex& m, Side side) const;

 private:
  TaylorReaction interior_;
  TaylorReaction exterior_;
  Inclusion inclusion_ = Inclusion::circle({0.5, 0.5}, 0.0);
};

struct AdmissibilityReport {
  int truncation_order = 0;
  bool vanishes_at_base = false;
  bool first_derivatives_vanish = false;
  bool symmetric = false;
  bool jump_present = false;
  /// Largest |interior - exterior| over the sampled interface points, keyed
  /// by "G<component>_<multi-index>".
  std::map<std::string, double> max_jump;
  std::size_t sample_count = 0;
  /// Regularity exponents have no discrete counterpart; kept as labels.
  std::vector<std::string> metadata;

  bool admissible() const { return vanishes_at_base && first_derivatives_vanish && symmetric && jump_present; }
  bool operator==(const AdmissibilityReport&) const = default;
};

/// Samples the interface at boundary-cell midpoints of `g` when given,
/// otherwise at 128 evenly spaced interface points.
AdmissibilityReport check_admissibility(const PiecewiseReaction& r, const std::optional<Grid>& g = std::nullopt);

/// |interior - exterior| coefficient at the interface point nearest p.
/// Throws GeometryError when p is farther than max_distance from the interface.
double jump_magnitude(const PiecewiseReaction& r, const Vec2& p, int component, const MultiIndex& m,
                      double max_distance);

/// Reaction sampled on a grid: per-node branch from the indicator field and
/// coefficient values folded with 1/alpha!.
class ReactionOnGrid {
 public:
  ReactionOnGrid() = default;
  ReactionOnGrid(const PiecewiseReaction& r, const Grid& g, const IndicatorField& ind);

  int chemicals() const { return chemicals_; }
  int prey() const { return prey_; }
  const std::vector<double>& base() const { return base_; }
  bool interior(std::size_t node) const { return interior_[node] != 0; }
  bool empty() const;

  /// Value of component i at node k. `w` holds (u_1..u_N, v_1..v_M) at the node.
  double eval(int component, std::size_t node, double t, const double* w) const;

  /// Taylor coefficient at order `l` in epsilon of G along the curve
  /// w(eps) = w0 + sum_k series[a][k-1] eps^k / k!, multiplied by l!.
  /// `series` is indexed [variable][k-1] for k = 1..l.
  double series_derivative(int component, std::size_t node, double t, const std::vector<std::vector<double>>& series,
                           int l) const;

  struct Term {
    std::vector<std::pair<int, int>> powers;  ///< (variable, exponent)
    Field coeff;                              ///< c(x) / alpha! per node
    int order = 0;
  };
  const std::vector<Term>& terms(int component) const { return terms_[static_cast<std::size_t>(component)]; }

 private:
  int chemicals_ = 0;
  int prey_ = 0;
  std::vector<double> base_;
  std::vector<unsigned char> interior_;
  TimeProfile inner_profile_;
  TimeProfile outer_profile_;
  std::vector<std::vector<Term>> terms_;
};

}  // namespace anomalykit
