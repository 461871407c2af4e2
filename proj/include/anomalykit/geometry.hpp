/// @file geometry.hpp
/// @brief Interior inclusions, their rasterization onto a Grid, and
/// truncated polyhedral corners used by the CGO probes.
#pragma once

#include "anomalykit/grid.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace anomalykit {

struct Circle {
  Vec2 center{0.5, 0.5};
  double radius = 0.0;
};

/// Simple polygon, vertices counterclockwise.
struct Polygon {
  std::vector<Vec2> vertices;
};

/// Star-shaped curve r(theta) = a0 + sum_k a_k cos(k theta) + b_k sin(k theta)
/// about `center`; `fourier` holds {a0, a1, b1, a2, b2, ...}.
struct StarShape {
  Vec2 center{0.5, 0.5};
  std::vector<double> fourier;

  double radius(double theta) const;
  double radius_derivative(double theta) const;
};

class Inclusion {
 public:
  enum class Kind { kCircle, kPolygon, kStar };

  static Inclusion circle(const Vec2& center, double radius);
  static Inclusion polygon(std::vector<Vec2> vertices);
  static Inclusion star(const Vec2& center, std::vector<double> fourier);

  /// Rebuild an inclusion of `kind` from a flat parameter vector:
  /// circle {cx, cy, r}; polygon {x0, y0, x1, y1, ...}; star {cx, cy, a0, a1, b1, ...}.
  static Inclusion from_parameters(Kind kind, const std::vector<double>& params);

  Kind kind() const;
  std::string kind_name() const;
  std::vector<double> parameters() const;

  const Circle* as_circle() const { return std::get_if<Circle>(&shape_); }
  const Polygon* as_polygon() const { return std::get_if<Polygon>(&shape_); }
  const StarShape* as_star() const { return std::get_if<StarShape>(&shape_); }

  /// Negative inside, positive outside. Exact for circles and polygons;
  /// first-order normalized radial estimate for star shapes.
  double signed_distance(const Vec2& p) const;

  /// Outward unit normal of the level set through p (gradient of the
  /// signed distance).
  Vec2 normal(const Vec2& p) const;

  bool contains(const Vec2& p) const { return signed_distance(p) <= 0.0; }

  /// Nearest point on the interface, p - sd(p) * n(p).
  Vec2 project_to_boundary(const Vec2& p) const;

  double area() const;

  /// Points on the interface, evenly spaced in the natural parameter
  /// (angle for circle/star, arc length for polygons).
  std::vector<Vec2> boundary_samples(int count) const;

  /// Axis-aligned bounding box [xmin, xmax] x [ymin, ymax].
  Rect bounding_box() const;

  /// Throws GeometryError unless the closure sits at distance
  /// >= 2 max(hx, hy) from the outer wall.
  void require_inside(const Grid& g) const;

  bool empty() const;

 private:
  using Shape = std::variant<Circle, Polygon, StarShape>;
  explicit Inclusion(Shape s) : shape_(std::move(s)) {}
  Shape shape_;
};

/// Discrete indicator of the inclusion on a grid.
struct IndicatorField {
  struct BoundaryCell {
    std::size_t node = 0;
    Vec2 normal = Vec2::Zero();
  };

  Field fraction;                          ///< per-node control-volume fraction in [0, 1]
  std::vector<BoundaryCell> boundary_cells;  ///< nodes with 0 < fraction < 1

  /// Sum of fraction times control volume.
  double area(const Grid& g) const;
  /// Branch selection used by the solvers: fraction >= 0.5.
  bool interior(std::size_t node) const { return fraction[node] >= 0.5; }
};

/// Control-volume fractions from 4x4 subcell sampling; each subcell is
/// clipped against the tangent line of the interface through its centre,
/// which keeps the area error second order in the grid spacing.
IndicatorField rasterize_inclusion(const Inclusion& inc, const Grid& g);

/// Area of {(p, q) in [-sx/2, sx/2] x [-sy/2, sy/2] : n . (p, q) <= -d}
/// divided by sx * sy, for a unit normal n. Exposed for tests.
double halfplane_box_fraction(double sx, double sy, const Vec2& n, double d);

/// Truncated convex polyhedral corner K_h in 2 or 3 dimensions.
struct TruncatedCorner {
  int dim = 2;
  Eigen::VectorXd apex;
  std::vector<Eigen::VectorXd> edges;  ///< unit edge directions
  double radius = 0.0;                 ///< truncation radius h
  Eigen::VectorXd axis;                ///< unit axis v_c
  double half_angle = 0.0;             ///< theta_c in (0, pi/2)

  /// Builds a corner from raw edge vectors. The axis is the normalized mean
  /// of the unit edges and theta_c the largest edge-axis angle.
  static TruncatedCorner from_edges(const Eigen::VectorXd& apex, std::vector<Eigen::VectorXd> edges,
                                    double radius);

  /// Symmetric 2-D sector with the given axis and half-angle.
  static TruncatedCorner sector_2d(const Vec2& apex, const Vec2& axis, double half_angle, double radius);

  /// Is x inside K_h (closed cone, open ball)?
  bool contains(const Eigen::VectorXd& x) const;
};

/// Corner of a convex polygon vertex. h must not exceed half of the shorter
/// adjacent edge; when a grid is given the ball B_h(apex) must lie inside it.
TruncatedCorner corner_from_polygon(const Inclusion& inc, std::size_t vertex_index, double h,
                                    const std::optional<Grid>& domain = std::nullopt);

struct ProbeDirection {
  Eigen::VectorXd xi;
  Eigen::VectorXd xi_perp;
  double rho = 0.0;
};

/// xi = -axis, xi_perp its counterclockwise rotation in 2-D (a fixed
/// deterministic orthogonal choice in 3-D), rho = cos(theta_c).
ProbeDirection probe_direction(const TruncatedCorner& c);

}  // namespace anomalykit
