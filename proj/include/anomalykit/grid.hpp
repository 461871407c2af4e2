/// @file grid.hpp
/// @brief Uniform node-centred tensor grid on a rectangle.
///
/// Nodes sit on the rectangle including its boundary, so nx nodes span the
/// x-extent with spacing (x1 - x0) / (nx - 1). Each node owns the control
/// volume [x - hx/2, x + hx/2] x [y - hy/2, y + hy/2] clipped to the
/// rectangle; boundary nodes therefore carry half (corner: quarter) volumes.
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace anomalykit {

using Vec2 = Eigen::Vector2d;
using Field = std::vector<double>;

struct Rect {
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = 0.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool operator==(const Rect&) const = default;
};

class Grid {
 public:
  static constexpr int kMinNodes = 16;

  Grid(int nx, int ny, Rect bounds);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Rect& bounds() const { return bounds_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double h_max() const { return hx_ > hy_ ? hx_ : hy_; }
  double h_min() const { return hx_ < hy_ ? hx_ : hy_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx_)); }
  int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx_)); }

  double x(int i) const;
  double y(int j) const;
  Vec2 node(int i, int j) const { return {x(i), y(j)}; }
  Vec2 node(std::size_t k) const { return node(col(k), row(k)); }

  bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1; }
  bool is_boundary(std::size_t k) const { return is_boundary(col(k), row(k)); }

  /// Outward unit normal at a boundary node; corners get the diagonal.
  /// Zero vector for interior nodes.
  Vec2 outward_normal(int i, int j) const;

  /// Boundary node indices ordered counterclockwise from the lower-left
  /// corner: bottom edge left to right, right edge upwards, top edge right
  /// to left, left edge downwards. Each node appears once.
  const std::vector<std::size_t>& boundary_nodes() const { return boundary_; }

  /// Area of the control volume owned by node (i, j).
  double control_volume(int i, int j) const;
  double control_volume(std::size_t k) const { return control_volume(col(k), row(k)); }

  /// Trapezoidal integral of a nodal field over the rectangle.
  double integrate(const Field& f) const;

  /// Bilinear interpolation of a nodal field; points outside are clamped.
  double interpolate(const Field& f, const Vec2& p) const;

  /// Index of the node closest to p (clamped to the rectangle).
  std::size_t nearest_node(const Vec2& p) const;

  bool operator==(const Grid& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && bounds_ == o.bounds_; }

 private:
  int nx_;
  int ny_;
  Rect bounds_;
  double hx_;
  double hy_;
  std::vector<std::size_t> boundary_;
};

/// Validating factory: nx, ny >= 16 and positive extents.
Grid build_grid(int nx, int ny, const Rect& bounds);

}  // namespace anomalykit
