#pragma once

#include <Eigen/Dense>

#include "eqot/errors.hpp"

namespace eqot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Continuous-time LTI system  dx/dt = A x + B u.
struct LTISystem {
  Matrix A;  // d x d drift
  Matrix B;  // d x m input map

  LTISystem(Matrix A_in, Matrix B_in);

  Eigen::Index dim() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
};

/// Unit-horizon controllability Gramian W = ∫₀¹ e^{A(1-τ)} B Bᵀ e^{Aᵀ(1-τ)} dτ
/// together with its certified inverse.
struct Gramian {
  Matrix W;
  Matrix W_inv;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

/// Orthonormal basis of E = ker(A) with the associated projectors and the
/// reduction/embedding pair. reduce_map = basisᵀ and embed_map = basis, so
/// reduce(embed(w)) = w and embed(reduce(x)) = P_E x.
class EquilibriumSpace {
 public:
  explicit EquilibriumSpace(Matrix basis);

  Eigen::Index state_dim() const { return basis_.rows(); }
  Eigen::Index eq_dim() const { return basis_.cols(); }

  const Matrix& basis() const { return basis_; }
  const Matrix& projector_e() const { return projector_e_; }
  const Matrix& projector_perp() const { return projector_perp_; }
  Matrix reduce_map() const { return basis_.transpose(); }
  const Matrix& embed_map() const { return basis_; }

  Vector project_e(const Vector& v) const;
  Vector project_perp(const Vector& v) const;

  /// Equilibrium coordinates of x. Throws OffEquilibriumError when
  /// ‖P_perp x‖ > tol·‖x‖.
  Vector reduce(const Vector& x, double tol = 1e-8) const;

  /// State-space point of the equilibrium coordinates w.
  Vector embed(const Vector& w) const;

  /// Row-wise reduce/embed for point clouds.
  Matrix reduce_rows(const Matrix& states, double tol = 1e-8) const;
  Matrix embed_rows(const Matrix& reduced) const;

 private:
  Matrix basis_;           // d x p, orthonormal columns
  Matrix projector_e_;     // basis basisᵀ
  Matrix projector_perp_;  // I - P_E
};

/// Matrix exponential by Padé scaling-and-squaring.
Matrix expm(const Matrix& M);

/// Gramian by Gauss-Legendre quadrature of the integrand. Throws
/// UncontrollableError when the smallest eigenvalue falls below
/// tol * largest eigenvalue.
Gramian gramian(const LTISystem& sys, int quad_nodes = 64, double tol = 1e-10);

/// Kernel of A by singular-value thresholding (σ ≤ tol·σ_max). The returned
/// basis is canonical: columns are chosen by pivoted Gram-Schmidt over the
/// projections of the standard basis, then sign-fixed, so it depends only on
/// the subspace. Throws TrivialEquilibriumError when ker(A) = {0}.
EquilibriumSpace equilibrium_space(const LTISystem& sys, double tol = 1e-9);

}  // namespace eqot
