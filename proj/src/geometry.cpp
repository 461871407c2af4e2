#include "anomalykit/geometry.hpp"

#include "anomalykit/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace anomalykit {
namespace {

constexpr double kPi = std::numbers::pi;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) a += cross2(v[k], v[(k + 1) % v.size()]);
  return 0.5 * a;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross2(q2 - q1, p1 - q1);
  const double d2 = cross2(q2 - q1, p2 - q1);
  const double d3 = cross2(p2 - p1, q1 - p1);
  const double d4 = cross2(p2 - p1, q2 - p1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

void validate_polygon(const std::vector<Vec2>& v) {
  if (v.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
  for (const auto& p : v)
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) throw GeometryError("polygon vertex is not finite");
  if (!(signed_area(v) > 0.0)) throw GeometryError("polygon vertices must be counterclockwise and non-degenerate");
  const std::size_t n = v.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (b == a + 1 || (a == 0 && b == n - 1)) continue;
      if (segments_intersect(v[a], v[(a + 1) % n], v[b], v[(b + 1) % n]))
        throw GeometryError("polygon is not simple");
    }
  }
}

bool point_in_polygon(const std::vector<Vec2>& v, const Vec2& p) {
  bool inside = false;
  const std::size_t n = v.size();
  for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
    if (((v[a].y() > p.y()) != (v[b].y() > p.y())) &&
        (p.x() < (v[b].x() - v[a].x()) * (p.y() - v[a].y()) / (v[b].y() - v[a].y()) + v[a].x()))
      inside = !inside;
  }
  return inside;
}

struct PolygonNearest {
  double distance;
  Vec2 point;
  std::size_t edge;
};

PolygonNearest polygon_nearest(const std::vector<Vec2>& v, const Vec2& p) {
  PolygonNearest best{std::numeric_limits<double>::infinity(), v[0], 0};
  const std::size_t n = v.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& a = v[k];
    const Vec2& b = v[(k + 1) % n];
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec2 q = a + t * ab;
    const double d = (p - q).norm();
    if (d < best.distance) best = {d, q, k};
  }
  return best;
}

double ramp2(double x) { return x > 0.0 ? 0.5 * x * x : 0.0; }

}  // namespace

double StarShape::radius(double theta) const {
  double r = fourier.empty() ? 0.0 : fourier[0];
  for (std::size_t k = 1; 2 * k - 1 < fourier.size(); ++k) {
    const double a = fourier[2 * k - 1];
    const double b = 2 * k < fourier.size() ? fourier[2 * k] : 0.0;
    r += a * std::cos(k * theta) + b * std::sin(k * theta);
  }
  return r;
}

double StarShape::radius_derivative(double theta) const {
  double dr = 0.0;
  for (std::size_t k = 1; 2 * k - 1 < fourier.size(); ++k) {
    const double a = fourier[2 * k - 1];
    const double b = 2 * k < fourier.size() ? fourier[2 * k] : 0.0;
    dr += k * (-a * std::sin(k * theta) + b * std::cos(k * theta));
  }
  return dr;
}

Inclusion Inclusion::circle(const Vec2& center, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw GeometryError("circle radius must be nonnegative");
  return Inclusion(Circle{center, radius});
}

Inclusion Inclusion::polygon(std::vector<Vec2> vertices) {
  validate_polygon(vertices);
  return Inclusion(Polygon{std::move(vertices)});
}

Inclusion Inclusion::star(const Vec2& center, std::vector<double> fourier) {
  if (fourier.empty()) throw GeometryError("star shape needs at least the mean radius");
  StarShape s{center, std::move(fourier)};
  for (int k = 0; k < 720; ++k) {
    if (!(s.radius(2 * kPi * k / 720) > 0.0)) throw GeometryError("star shape radius must stay positive");
  }
  return Inclusion(std::move(s));
}

Inclusion Inclusion::from_parameters(Kind kind, const std::vector<double>& p) {
  switch (kind) {
    case Kind::kCircle:
      if (p.size() != 3) throw ConfigError("circle parameters are {cx, cy, r}");
      return circle({p[0], p[1]}, p[2]);
    case Kind::kPolygon: {
      if (p.size() < 6 || p.size() % 2 != 0) throw ConfigError("polygon parameters are vertex pairs");
      std::vector<Vec2> v;
      for (std::size_t k = 0; k < p.size(); k += 2) v.emplace_back(p[k], p[k + 1]);
      return polygon(std::move(v));
    }
    case Kind::kStar:
      if (p.size() < 3) throw ConfigError("star parameters are {cx, cy, a0, ...}");
      return star({p[0], p[1]}, std::vector<double>(p.begin() + 2, p.end()));
  }
  throw ConfigError("unknown inclusion kind");
}

Inclusion::Kind Inclusion::kind() const {
  if (as_circle()) return Kind::kCircle;
  if (as_polygon()) return Kind::kPolygon;
  return Kind::kStar;
}

std::string Inclusion::kind_name() const {
  switch (kind()) {
    case Kind::kCircle: return "circle";
    case Kind::kPolygon: return "polygon";
    case Kind::kStar: return "star";
  }
  return "unknown";
}

std::vector<double> Inclusion::parameters() const {
  if (const auto* c = as_circle()) return {c->center.x(), c->center.y(), c->radius};
  if (const auto* p = as_polygon()) {
    std::vector<double> out;
    for (const auto& v : p->vertices) {
      out.push_back(v.x());
      out.push_back(v.y());
    }
    return out;
  }
  const auto* s = as_star();
  std::vector<double> out{s->center.x(), s->center.y()};
  out.insert(out.end(), s->fourier.begin(), s->fourier.end());
  return out;
}

bool Inclusion::empty() const {
  if (const auto* c = as_circle()) return c->radius == 0.0;
  return false;
}

double Inclusion::signed_distance(const Vec2& p) const {
  if (const auto* c = as_circle()) return (p - c->center).norm() - c->radius;
  if (const auto* poly = as_polygon()) {
    const double d = polygon_nearest(poly->vertices, p).distance;
    return point_in_polygon(poly->vertices, p) ? -d : d;
  }
  const auto* s = as_star();
  const Vec2 q = p - s->center;
  const double r = q.norm();
  const double theta = std::atan2(q.y(), q.x());
  const double big_r = s->radius(theta);
  const double slope = s->radius_derivative(theta) / big_r;
  return (r - big_r) / std::sqrt(1.0 + slope * slope);
}

Vec2 Inclusion::normal(const Vec2& p) const {
  if (const auto* c = as_circle()) {
    const Vec2 q = p - c->center;
    const double r = q.norm();
    return r > 0.0 ? Vec2(q / r) : Vec2(1.0, 0.0);
  }
  if (const auto* poly = as_polygon()) {
    const auto near = polygon_nearest(poly->vertices, p);
    const Vec2 diff = p - near.point;
    const double len = diff.norm();
    if (len > 1e-14) {
      const bool inside = point_in_polygon(poly->vertices, p);
      return inside ? Vec2(-diff / len) : Vec2(diff / len);
    }
    const Vec2 a = poly->vertices[near.edge];
    const Vec2 b = poly->vertices[(near.edge + 1) % poly->vertices.size()];
    const Vec2 e = (b - a).normalized();
    return {e.y(), -e.x()};
  }
  const auto* s = as_star();
  const Vec2 q = p - s->center;
  const double r = q.norm();
  if (r == 0.0) return {1.0, 0.0};
  const double theta = std::atan2(q.y(), q.x());
  const Vec2 radial = q / r;
  const Vec2 tangential(-radial.y(), radial.x());
  const Vec2 g = radial - (s->radius_derivative(theta) / r) * tangential;
  return g.normalized();
}

Vec2 Inclusion::project_to_boundary(const Vec2& p) const {
  if (const auto* poly = as_polygon()) return polygon_nearest(poly->vertices, p).point;
  return p - signed_distance(p) * normal(p);
}

double Inclusion::area() const {
  if (const auto* c = as_circle()) return kPi * c->radius * c->radius;
  if (const auto* p = as_polygon()) return signed_area(p->vertices);
  const auto* s = as_star();
  double sum = s->fourier[0] * s->fourier[0];
  for (std::size_t k = 1; k < s->fourier.size(); ++k) sum += 0.5 * s->fourier[k] * s->fourier[k];
  return kPi * sum;
}

std::vector<Vec2> Inclusion::boundary_samples(int count) const {
  std::vector<Vec2> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  if (const auto* c = as_circle()) {
    for (int k = 0; k < count; ++k) {
      const double t = 2 * kPi * k / count;
      out.emplace_back(c->center + c->radius * Vec2(std::cos(t), std::sin(t)));
    }
    return out;
  }
  if (const auto* s = as_star()) {
    for (int k = 0; k < count; ++k) {
      const double t = 2 * kPi * k / count;
      out.emplace_back(s->center + s->radius(t) * Vec2(std::cos(t), std::sin(t)));
    }
    return out;
  }
  const auto& v = as_polygon()->vertices;
  double perimeter = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) perimeter += (v[(k + 1) % v.size()] - v[k]).norm();
  std::size_t edge = 0;
  double edge_start = 0.0;
  for (int k = 0; k < count; ++k) {
    const double s = perimeter * (k + 0.5) / count;
    while (edge_start + (v[(edge + 1) % v.size()] - v[edge]).norm() < s && edge + 1 < v.size()) {
      edge_start += (v[(edge + 1) % v.size()] - v[edge]).norm();
      ++edge;
    }
    const Vec2 a = v[edge];
    const Vec2 b = v[(edge + 1) % v.size()];
    out.emplace_back(a + (s - edge_start) / (b - a).norm() * (b - a));
  }
  return out;
}

Rect Inclusion::bounding_box() const {
  if (const auto* c = as_circle())
    return {c->center.x() - c->radius, c->center.x() + c->radius, c->center.y() - c->radius,
            c->center.y() + c->radius};
  Rect box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto grow = [&box](const Vec2& p) {
    box.x0 = std::min(box.x0, p.x());
    box.x1 = std::max(box.x1, p.x());
    box.y0 = std::min(box.y0, p.y());
    box.y1 = std::max(box.y1, p.y());
  };
  if (const auto* p = as_polygon()) {
    for (const auto& v : p->vertices) grow(v);
  } else {
    for (const auto& q : boundary_samples(2048)) grow(q);
  }
  return box;
}

void Inclusion::require_inside(const Grid& g) const {
  if (empty()) return;
  const Rect box = bounding_box();
  const Rect& dom = g.bounds();
  const double margin = 2.0 * g.h_max();
  const double gap = std::min({box.x0 - dom.x0, dom.x1 - box.x1, box.y0 - dom.y0, dom.y1 - box.y1});
  if (!(gap >= margin)) {
    throw GeometryError("inclusion closure must stay " + std::to_string(margin) +
                        " away from the outer boundary (gap " + std::to_string(gap) + ")");
  }
}

double IndicatorField::area(const Grid& g) const {
  double a = 0.0;
  for (std::size_t k = 0; k < fraction.size(); ++k) a += fraction[k] * g.control_volume(k);
  return a;
}

double halfplane_box_fraction(double sx, double sy, const Vec2& n, double d) {
  const double a = std::abs(n.x()) * sx;
  const double b = std::abs(n.y()) * sy;
  const double s = -d;
  const double big = std::max(a, b);
  if (big <= 0.0) return s >= 0.0 ? 1.0 : 0.0;
  if (std::min(a, b) <= 1e-12 * big) return std::clamp((s + 0.5 * big) / big, 0.0, 1.0);
  const double c = 0.5 * (a + b);
  const double e = 0.5 * (a - b);
  const double p = (ramp2(s + c) - ramp2(s + e) - ramp2(s - e) + ramp2(s - c)) / (a * b);
  return std::clamp(p, 0.0, 1.0);
}

IndicatorField rasterize_inclusion(const Inclusion& inc, const Grid& g) {
  inc.require_inside(g);
  IndicatorField out;
  out.fraction.assign(g.size(), 0.0);
  if (inc.empty()) return out;

  constexpr int kSub = 4;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double xa = std::max(g.x(i) - 0.5 * g.hx(), g.bounds().x0);
      const double xb = std::min(g.x(i) + 0.5 * g.hx(), g.bounds().x1);
      const double ya = std::max(g.y(j) - 0.5 * g.hy(), g.bounds().y0);
      const double yb = std::min(g.y(j) + 0.5 * g.hy(), g.bounds().y1);
      const Vec2 mid(0.5 * (xa + xb), 0.5 * (ya + yb));
      const double reach = 0.5 * std::hypot(xb - xa, yb - ya);
      const double d_mid = inc.signed_distance(mid);
      double frac;
      if (d_mid >= reach * 1.000001) {
        frac = 0.0;
      } else if (d_mid <= -reach * 1.000001) {
        frac = 1.0;
      } else {
        const double sx = (xb - xa) / kSub;
        const double sy = (yb - ya) / kSub;
        const double sub_reach = 0.5 * std::hypot(sx, sy);
        double sum = 0.0;
        for (int b = 0; b < kSub; ++b) {
          for (int a = 0; a < kSub; ++a) {
            const Vec2 c(xa + (a + 0.5) * sx, ya + (b + 0.5) * sy);
            const double d = inc.signed_distance(c);
            if (d >= sub_reach) continue;
            if (d <= -sub_reach) {
              sum += 1.0;
              continue;
            }
            sum += halfplane_box_fraction(sx, sy, inc.normal(c), d);
          }
        }
        frac = sum / (kSub * kSub);
      }
      const std::size_t k = g.index(i, j);
      out.fraction[k] = frac;
      if (frac > 0.0 && frac < 1.0) out.boundary_cells.push_back({k, inc.normal(g.node(i, j))});
    }
  }
  return out;
}

TruncatedCorner TruncatedCorner::from_edges(const Eigen::VectorXd& apex, std::vector<Eigen::VectorXd> edges,
                                            double radius) {
  const int dim = static_cast<int>(apex.size());
  if (dim != 2 && dim != 3) throw GeometryError("corners are supported in 2 or 3 dimensions");
  if (static_cast<int>(edges.size()) < dim) throw GeometryError("a corner needs at least n edges");
  if (!(radius > 0.0)) throw GeometryError("corner truncation radius must be positive");
  Eigen::VectorXd axis = Eigen::VectorXd::Zero(dim);
  for (auto& e : edges) {
    if (e.size() != dim) throw GeometryError("edge dimension does not match apex");
    const double len = e.norm();
    if (!(len > 0.0)) throw GeometryError("zero edge vector");
    e /= len;
    axis += e;
  }
  for (std::size_t a = 0; a < edges.size(); ++a)
    for (std::size_t b = a + 1; b < edges.size(); ++b)
      if (std::abs(edges[a].dot(edges[b])) > 1.0 - 1e-12) throw GeometryError("corner edges are not independent");
  if (dim == 3) {
    Eigen::Matrix3d m;
    m << edges[0], edges[1], edges[2];
    if (std::abs(m.determinant()) < 1e-12) throw GeometryError("corner edges do not span R^3");
  }
  if (!(axis.norm() > 1e-12)) throw GeometryError("corner is not strictly convex");
  axis.normalize();

  if (dim == 3) {
    // order edges counterclockwise around the axis
    Eigen::Vector3d ax = axis;
    Eigen::Vector3d ref = Eigen::Vector3d(edges[0]) - Eigen::Vector3d(edges[0]).dot(ax) * ax;
    ref.normalize();
    const Eigen::Vector3d ref2 = ax.cross(ref);
    std::stable_sort(edges.begin(), edges.end(), [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      const Eigen::Vector3d pa = a, pb = b;
      return std::atan2(pa.dot(ref2), pa.dot(ref)) < std::atan2(pb.dot(ref2), pb.dot(ref));
    });
  }

  double theta = 0.0;
  for (const auto& e : edges) theta = std::max(theta, std::acos(std::clamp(e.dot(axis), -1.0, 1.0)));
  if (!(theta < kPi / 2)) throw GeometryError("corner opening half-angle must be below pi/2");

  TruncatedCorner c;
  c.dim = dim;
  c.apex = apex;
  c.edges = std::move(edges);
  c.radius = radius;
  c.axis = axis;
  c.half_angle = theta;
  return c;
}

TruncatedCorner TruncatedCorner::sector_2d(const Vec2& apex, const Vec2& axis, double half_angle, double radius) {
  if (!(half_angle > 0.0 && half_angle < kPi / 2)) throw GeometryError("sector half-angle must lie in (0, pi/2)");
  const Vec2 a = axis.normalized();
  const Eigen::Rotation2Dd plus(half_angle), minus(-half_angle);
  std::vector<Eigen::VectorXd> edges{Eigen::VectorXd(minus * a), Eigen::VectorXd(plus * a)};
  return from_edges(Eigen::VectorXd(apex), std::move(edges), radius);
}

bool TruncatedCorner::contains(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd q = x - apex;
  if (!(q.norm() < radius)) return false;
  if (dim == 2) {
    Eigen::Matrix2d m;
    m << edges[0], edges[1];
    const Eigen::Vector2d coef = m.colPivHouseholderQr().solve(Eigen::Vector2d(q));
    return coef.x() >= -1e-14 && coef.y() >= -1e-14;
  }
  const Eigen::Vector3d q3 = q;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    Eigen::Vector3d n = Eigen::Vector3d(edges[k]).cross(Eigen::Vector3d(edges[(k + 1) % edges.size()]));
    if (n.dot(Eigen::Vector3d(axis)) < 0) n = -n;
    if (n.dot(q3) < -1e-14) return false;
  }
  return true;
}

TruncatedCorner corner_from_polygon(const Inclusion& inc, std::size_t vertex_index, double h,
                                    const std::optional<Grid>& domain) {
  const auto* poly = inc.as_polygon();
  if (!poly) throw GeometryError("corner_from_polygon needs a polygon inclusion");
  const auto& v = poly->vertices;
  if (vertex_index >= v.size()) throw GeometryError("vertex index out of range");
  const std::size_t n = v.size();
  const Vec2 apex = v[vertex_index];
  const Vec2 prev = v[(vertex_index + n - 1) % n];
  const Vec2 next = v[(vertex_index + 1) % n];
  if (!(cross2(apex - prev, next - apex) > 0.0))
    throw GeometryError("vertex " + std::to_string(vertex_index) + " has interior angle >= pi");
  const double shorter = std::min((next - apex).norm(), (prev - apex).norm());
  if (!(h > 0.0) || h > 0.5 * shorter)
    throw GeometryError("corner radius must lie in (0, half the shorter adjacent edge]");
  if (domain) {
    const Rect& b = domain->bounds();
    if (apex.x() - h < b.x0 || apex.x() + h > b.x1 || apex.y() - h < b.y0 || apex.y() + h > b.y1)
      throw GeometryError("ball B_h around the corner apex leaves the domain");
  }
  std::vector<Eigen::VectorXd> edges{Eigen::VectorXd((next - apex).normalized()),
                                     Eigen::VectorXd((prev - apex).normalized())};
  return TruncatedCorner::from_edges(Eigen::VectorXd(apex), std::move(edges), h);
}

ProbeDirection probe_direction(const TruncatedCorner& c) {
  if (!(c.half_angle < kPi / 2)) throw GeometryError("probe direction needs theta_c < pi/2");
  ProbeDirection p;
  p.xi = -c.axis;
  if (c.dim == 2) {
    p.xi_perp = Eigen::VectorXd(2);
    p.xi_perp << -p.xi(1), p.xi(0);
  } else {
    Eigen::Index pick = 0;
    p.xi.cwiseAbs().minCoeff(&pick);
    Eigen::VectorXd e = Eigen::VectorXd::Unit(c.dim, pick);
    Eigen::VectorXd perp = e - e.dot(p.xi) * p.xi;
    p.xi_perp = perp.normalized();
  }
  p.rho = std::cos(c.half_angle);
  return p;
}

}  // namespace anomalykit
