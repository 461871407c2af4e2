#include "anomalykit/operators.hpp"

#include "anomalykit/error.hpp"

#include <cmath>
#include <vector>

namespace anomalykit {

void apply_flux_divergence(const Grid& g, const Field* coeff, const Field& w, Field& out, BoundaryKind bc) {
  const int nx = g.nx();
  const int ny = g.ny();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  out.assign(g.size(), 0.0);
  const bool dir = bc == BoundaryKind::kDirichlet;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const bool edge_x = i == 0 || i == nx - 1;
      const bool edge_y = j == 0 || j == ny - 1;
      if (dir && (edge_x || edge_y)) continue;
      const std::size_t k = g.index(i, j);
      const double ck = coeff ? (*coeff)[k] : 1.0;
      auto face = [&](std::size_t nb) { return coeff ? 0.5 * (ck + (*coeff)[nb]) : 1.0; };
      double fx = 0.0;
      if (i + 1 < nx) fx += face(k + 1) * (w[k + 1] - w[k]);
      if (i > 0) fx -= face(k - 1) * (w[k] - w[k - 1]);
      double fy = 0.0;
      const std::size_t up = k + static_cast<std::size_t>(nx);
      const std::size_t dn = k - static_cast<std::size_t>(nx);
      if (j + 1 < ny) fy += face(up) * (w[up] - w[k]);
      if (j > 0) fy -= face(dn) * (w[k] - w[dn]);
      out[k] = (edge_x ? 2.0 : 1.0) * fx * ihx2 + (edge_y ? 2.0 : 1.0) * fy * ihy2;
    }
  }
}

void add_taxis(const Grid& g, const Field& v, const Field& u, double scale, Field& out, BoundaryKind bc) {
  if (scale == 0.0) return;
  Field tmp;
  apply_flux_divergence(g, &v, u, tmp, bc);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += scale * tmp[k];
}

SparseMatrix laplacian_matrix(const Grid& g, BoundaryKind bc) {
  const int nx = g.nx();
  const int ny = g.ny();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.size() * 5);
  const bool dir = bc == BoundaryKind::kDirichlet;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const bool edge_x = i == 0 || i == nx - 1;
      const bool edge_y = j == 0 || j == ny - 1;
      if (dir && (edge_x || edge_y)) continue;
      const int k = static_cast<int>(g.index(i, j));
      const double sx = (edge_x ? 2.0 : 1.0) * ihx2;
      const double sy = (edge_y ? 2.0 : 1.0) * ihy2;
      double diag = 0.0;
      if (i + 1 < nx) {
        t.emplace_back(k, k + 1, sx);
        diag -= sx;
      }
      if (i > 0) {
        t.emplace_back(k, k - 1, sx);
        diag -= sx;
      }
      if (j + 1 < ny) {
        t.emplace_back(k, k + nx, sy);
        diag -= sy;
      }
      if (j > 0) {
        t.emplace_back(k, k - nx, sy);
        diag -= sy;
      }
      t.emplace_back(k, k, diag);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix implicit_diffusion_matrix(const Grid& g, const SparseMatrix& lap, double diff, const Field* a, double dt) {
  SparseMatrix m = lap;
  if (a) {
    Eigen::VectorXd diag(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) diag(static_cast<Eigen::Index>(k)) = (*a)[k];
    m = m * diag.asDiagonal();
  }
  m *= -dt * diff;
  SparseMatrix id(m.rows(), m.cols());
  id.setIdentity();
  m += id;
  m.makeCompressed();
  return m;
}

Field neumann_trace(const Grid& g, const Field& w) {
  const auto& nodes = g.boundary_nodes();
  Field out(nodes.size());
  const int nx = g.nx();
  const int ny = g.ny();
  auto dx = [&](int i, int j) {
    if (i == 0) return (-3 * w[g.index(0, j)] + 4 * w[g.index(1, j)] - w[g.index(2, j)]) / (2 * g.hx());
    if (i == nx - 1)
      return (3 * w[g.index(nx - 1, j)] - 4 * w[g.index(nx - 2, j)] + w[g.index(nx - 3, j)]) / (2 * g.hx());
    return (w[g.index(i + 1, j)] - w[g.index(i - 1, j)]) / (2 * g.hx());
  };
  auto dy = [&](int i, int j) {
    if (j == 0) return (-3 * w[g.index(i, 0)] + 4 * w[g.index(i, 1)] - w[g.index(i, 2)]) / (2 * g.hy());
    if (j == ny - 1)
      return (3 * w[g.index(i, ny - 1)] - 4 * w[g.index(i, ny - 2)] + w[g.index(i, ny - 3)]) / (2 * g.hy());
    return (w[g.index(i, j + 1)] - w[g.index(i, j - 1)]) / (2 * g.hy());
  };
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const int i = g.col(nodes[b]);
    const int j = g.row(nodes[b]);
    const Vec2 n = g.outward_normal(i, j);
    double val = 0.0;
    if (n.x() != 0.0) val += n.x() * dx(i, j);
    if (n.y() != 0.0) val += n.y() * dy(i, j);
    out[b] = val;
  }
  return out;
}

double sup_norm(const Field& f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

GmresResult gmres(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply_a,
                  const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply_prec,
                  const Eigen::VectorXd& b, Eigen::VectorXd& x, int restart, int max_iterations, double rel_tol) {
  GmresResult res;
  const Eigen::Index n = b.size();
  const double bnorm = b.norm();
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  const double target = rel_tol * bnorm;
  Eigen::VectorXd ax(n), z(n), w(n);
  Eigen::MatrixXd basis(n, restart + 1);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(restart + 1, restart);
  Eigen::VectorXd cs(restart), sn(restart), rhs(restart + 1);

  while (res.iterations < max_iterations) {
    apply_a(x, ax);
    Eigen::VectorXd r = b - ax;
    double beta = r.norm();
    res.residual = beta;
    if (beta <= target) {
      res.converged = true;
      return res;
    }
    basis.col(0) = r / beta;
    rhs.setZero();
    rhs(0) = beta;
    hess.setZero();
    int k = 0;
    for (; k < restart && res.iterations < max_iterations; ++k) {
      ++res.iterations;
      apply_prec(basis.col(k), z);
      apply_a(z, w);
      for (int i = 0; i <= k; ++i) {
        hess(i, k) = w.dot(basis.col(i));
        w -= hess(i, k) * basis.col(i);
      }
      hess(k + 1, k) = w.norm();
      if (hess(k + 1, k) > 0.0) basis.col(k + 1) = w / hess(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs(i) * hess(i, k) + sn(i) * hess(i + 1, k);
        hess(i + 1, k) = -sn(i) * hess(i, k) + cs(i) * hess(i + 1, k);
        hess(i, k) = t;
      }
      const double denom = std::hypot(hess(k, k), hess(k + 1, k));
      cs(k) = hess(k, k) / denom;
      sn(k) = hess(k + 1, k) / denom;
      hess(k, k) = denom;
      hess(k + 1, k) = 0.0;
      rhs(k + 1) = -sn(k) * rhs(k);
      rhs(k) = cs(k) * rhs(k);
      res.residual = std::abs(rhs(k + 1));
      if (res.residual <= target || hess(k, k) == 0.0) {
        ++k;
        break;
      }
    }
    const Eigen::VectorXd y =
        hess.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(rhs.head(k));
    Eigen::VectorXd update = basis.leftCols(k) * y;
    apply_prec(update, z);
    x += z;
    if (res.residual <= target) {
      apply_a(x, ax);
      res.residual = (b - ax).norm();
      res.converged = res.residual <= 10 * target;
      if (res.converged) return res;
    }
  }
  return res;
}

}  // namespace anomalykit
