#include "anomalykit/grid.hpp"

#include "anomalykit/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace anomalykit {

Grid::Grid(int nx, int ny, Rect bounds) : nx_(nx), ny_(ny), bounds_(bounds) {
  if (nx < kMinNodes || ny < kMinNodes) {
    throw ConfigError("grid needs at least " + std::to_string(kMinNodes) + " nodes per axis, got " +
                      std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw ConfigError("grid bounds must have positive extents");
  }
  hx_ = bounds.width() / (nx - 1);
  hy_ = bounds.height() / (ny - 1);

  boundary_.reserve(static_cast<std::size_t>(2 * (nx - 1) + 2 * (ny - 1)));
  for (int i = 0; i < nx - 1; ++i) boundary_.push_back(index(i, 0));
  for (int j = 0; j < ny - 1; ++j) boundary_.push_back(index(nx - 1, j));
  for (int i = nx - 1; i > 0; --i) boundary_.push_back(index(i, ny - 1));
  for (int j = ny - 1; j > 0; --j) boundary_.push_back(index(0, j));
}

double Grid::x(int i) const {
  if (i == nx_ - 1) return bounds_.x1;
  return bounds_.x0 + bounds_.width() * static_cast<double>(i) / static_cast<double>(nx_ - 1);
}

double Grid::y(int j) const {
  if (j == ny_ - 1) return bounds_.y1;
  return bounds_.y0 + bounds_.height() * static_cast<double>(j) / static_cast<double>(ny_ - 1);
}

Vec2 Grid::outward_normal(int i, int j) const {
  Vec2 n = Vec2::Zero();
  if (i == 0) n.x() = -1.0;
  if (i == nx_ - 1) n.x() = 1.0;
  if (j == 0) n.y() = -1.0;
  if (j == ny_ - 1) n.y() = 1.0;
  const double len = n.norm();
  return len > 0.0 ? Vec2(n / len) : n;
}

double Grid::control_volume(int i, int j) const {
  const double wx = (i == 0 || i == nx_ - 1) ? 0.5 : 1.0;
  const double wy = (j == 0 || j == ny_ - 1) ? 0.5 : 1.0;
  return wx * wy * hx_ * hy_;
}

double Grid::integrate(const Field& f) const {
  double sum = 0.0;
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i) sum += control_volume(i, j) * f[index(i, j)];
  return sum;
}

double Grid::interpolate(const Field& f, const Vec2& p) const {
  const double s = std::clamp((p.x() - bounds_.x0) / hx_, 0.0, static_cast<double>(nx_ - 1));
  const double t = std::clamp((p.y() - bounds_.y0) / hy_, 0.0, static_cast<double>(ny_ - 1));
  const int i = std::min(static_cast<int>(s), nx_ - 2);
  const int j = std::min(static_cast<int>(t), ny_ - 2);
  const double a = s - i;
  const double b = t - j;
  return (1 - a) * (1 - b) * f[index(i, j)] + a * (1 - b) * f[index(i + 1, j)] +
         (1 - a) * b * f[index(i, j + 1)] + a * b * f[index(i + 1, j + 1)];
}

std::size_t Grid::nearest_node(const Vec2& p) const {
  const int i = static_cast<int>(std::lround(std::clamp((p.x() - bounds_.x0) / hx_, 0.0, double(nx_ - 1))));
  const int j = static_cast<int>(std::lround(std::clamp((p.y() - bounds_.y0) / hy_, 0.0, double(ny_ - 1))));
  return index(i, j);
}

Grid build_grid(int nx, int ny, const Rect& bounds) { return Grid(nx, ny, bounds); }

}  // namespace anomalykit
