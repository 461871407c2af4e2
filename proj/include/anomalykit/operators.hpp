#pragma once

#include "anomalykit/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>

namespace anomalykit {

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseSolver = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

enum class BoundaryKind { kNeumann, kDirichlet };

/// Flux-form divergence of coeff * grad(w). Faces take the arithmetic mean
/// of the nodal coefficient, wall fluxes vanish and boundary nodes divide by
/// their half control volume. With coeff = 1 this is the 5-point Laplacian
/// with mirrored ghost nodes. In Dirichlet mode boundary entries are zero.
void apply_flux_divergence(const Grid& g, const Field* coeff, const Field& w, Field& out, BoundaryKind bc);

inline void apply_laplacian(const Grid& g, const Field& w, Field& out, BoundaryKind bc) {
  apply_flux_divergence(g, nullptr, w, out, bc);
}

/// out += scale * div(v grad u)
void add_taxis(const Grid& g, const Field& v, const Field& u, double scale, Field& out, BoundaryKind bc);

/// Matrix of the 5-point Laplacian (Neumann: mirrored ghosts; Dirichlet:
/// zero boundary rows).
SparseMatrix laplacian_matrix(const Grid& g, BoundaryKind bc);

/// I - dt * diff * L * diag(a). Empty rows of `lap` (Dirichlet nodes)
/// become identity rows. `a` may be null for a = 1.
SparseMatrix implicit_diffusion_matrix(const Grid& g, const SparseMatrix& lap, double diff, const Field* a, double dt);

/// Outward normal derivative at boundary nodes from second-order one-sided
/// differences, in boundary-node order. Corner nodes use the diagonal normal.
Field neumann_trace(const Grid& g, const Field& w);

double sup_norm(const Field& f);

struct GmresResult {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES for A x = b with right preconditioning x = M^{-1} y.
/// `apply_a` and `apply_prec` write their result into the second argument.
GmresResult gmres(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply_a,
                  const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply_prec,
                  const Eigen::VectorXd& b, Eigen::VectorXd& x, int restart, int max_iterations, double rel_tol);

}  // namespace anomalykit
