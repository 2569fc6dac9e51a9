#include "eqot/linsys.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "eqot/quadrature.hpp"

namespace eqot {

namespace {

void check_finite(const Matrix& M, const char* name) {
  if (!M.allFinite()) {
    throw Error(std::string(name) + " has non-finite entries");
  }
}

/// [m/m] Padé approximant of e^M; orders and coefficients from the standard
/// double-precision scaling-and-squaring scheme.
Matrix pade_exp(const Matrix& M) {
  const Eigen::Index d = M.rows();
  const Matrix I = Matrix::Identity(d, d);
  const double norm = M.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm

  struct LowOrder {
    double theta;
    std::vector<double> b;
  };
  static const std::array<LowOrder, 4> low = {{
      {1.495585217958292e-2, {120, 60, 12, 1}},
      {2.539398330063230e-1, {30240, 15120, 3360, 420, 30, 1}},
      {9.504178996162932e-1,
       {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1}},
      {2.097847961257068e0,
       {17643225600, 8821612800, 2075673600, 302702400, 30270240, 2162160,
        110880, 3960, 90, 1}},
  }};

  Matrix U, V;
  if (norm <= low.back().theta) {
    for (const auto& [theta, b] : low) {
      if (norm > theta) continue;
      const Matrix M2 = M * M;
      Matrix Usum = b[1] * I;
      Matrix Vsum = b[0] * I;
      Matrix Mpow = M2;
      for (std::size_t k = 2; k < b.size(); k += 2) {
        Vsum += b[k] * Mpow;
        if (k + 1 < b.size()) Usum += b[k + 1] * Mpow;
        if (k + 2 < b.size()) Mpow = Mpow * M2;
      }
      U = M * Usum;
      V = Vsum;
      break;
    }
    return Eigen::PartialPivLU<Matrix>(V - U).solve(V + U);
  }

  // Order 13 with scaling.
  static const std::array<double, 14> b = {
      64764752532480000., 32382376266240000., 7771770303897600.,
      1187353796428800.,  129060195264000.,   10559470521600.,
      670442572800.,      33522128640.,       1323241920.,
      40840800.,          960960.,            16380.,
      182.,               1.};
  const double theta13 = 5.371920351148152;
  int squarings = 0;
  Matrix A = M;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    A /= std::pow(2.0, squarings);
  }
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
           b[5] * A4 + b[3] * A2 + b[1] * I);
  V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 +
      b[2] * A2 + b[0] * I;
  Matrix R = Eigen::PartialPivLU<Matrix>(V - U).solve(V + U);
  for (int s = 0; s < squarings; ++s) R = R * R;
  return R;
}

}  // namespace

LTISystem::LTISystem(Matrix A_in, Matrix B_in)
    : A(std::move(A_in)), B(std::move(B_in)) {
  if (A.rows() < 1 || A.rows() != A.cols()) {
    throw Error("A must be square with d >= 1");
  }
  if (B.rows() != A.rows() || B.cols() < 1) {
    throw Error("B must be d x m with m >= 1");
  }
  check_finite(A, "A");
  check_finite(B, "B");
}

Matrix expm(const Matrix& M) {
  if (M.rows() != M.cols()) throw Error("expm: matrix must be square");
  check_finite(M, "expm input");
  return pade_exp(M);
}

Gramian gramian(const LTISystem& sys, int quad_nodes, double tol) {
  const Eigen::Index d = sys.dim();
  Matrix W = Matrix::Zero(d, d);
  // ∫₀¹ e^{A(1-τ)} B Bᵀ e^{Aᵀ(1-τ)} dτ = ∫₀¹ (e^{As}B)(e^{As}B)ᵀ ds.
  for (const auto& [s, w] : gauss_legendre(quad_nodes).mapped(0.0, 1.0)) {
    const Matrix C = expm(sys.A * s) * sys.B;
    W.noalias() += w * (C * C.transpose());
  }
  W = 0.5 * (W + W.transpose());

  Gramian g;
  g.W = W;
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  g.min_eigenvalue = es.eigenvalues().minCoeff();
  g.max_eigenvalue = es.eigenvalues().maxCoeff();
  if (!(g.min_eigenvalue > tol * g.max_eigenvalue)) {
    std::ostringstream msg;
    msg << "uncontrollable system: Gramian min eigenvalue "
        << g.min_eigenvalue << " below tolerance "
        << tol * g.max_eigenvalue;
    throw UncontrollableError(msg.str(), g.min_eigenvalue);
  }
  g.W_inv = Eigen::LLT<Matrix>(W).solve(Matrix::Identity(d, d));
  g.W_inv = 0.5 * (g.W_inv + g.W_inv.transpose());
  const double residual =
      (W * g.W_inv - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (residual > 1e-8) {
    throw UncontrollableError(
        "Gramian inverse failed the residual certificate (" +
            std::to_string(residual) + ")",
        g.min_eigenvalue);
  }
  return g;
}

EquilibriumSpace::EquilibriumSpace(Matrix basis) : basis_(std::move(basis)) {
  const Eigen::Index d = basis_.rows();
  if (basis_.cols() < 1) {
    throw TrivialEquilibriumError("trivial equilibrium set: ker(A) = {0}");
  }
  projector_e_ = basis_ * basis_.transpose();
  projector_e_ = 0.5 * (projector_e_ + projector_e_.transpose());
  projector_perp_ = Matrix::Identity(d, d) - projector_e_;
}

Vector EquilibriumSpace::project_e(const Vector& v) const {
  if (v.size() != state_dim()) throw Error("project: dimension mismatch");
  return projector_e_ * v;
}

Vector EquilibriumSpace::project_perp(const Vector& v) const {
  if (v.size() != state_dim()) throw Error("project: dimension mismatch");
  return projector_perp_ * v;
}

Vector EquilibriumSpace::reduce(const Vector& x, double tol) const {
  if (x.size() != state_dim()) throw Error("reduce: dimension mismatch");
  const double off = (projector_perp_ * x).norm();
  if (off > tol * x.norm()) {
    throw OffEquilibriumError(
        "off-equilibrium input to reduce (residual " + std::to_string(off) +
            ")",
        off);
  }
  return basis_.transpose() * x;
}

Vector EquilibriumSpace::embed(const Vector& w) const {
  if (w.size() != eq_dim()) throw Error("embed: dimension mismatch");
  return basis_ * w;
}

Matrix EquilibriumSpace::reduce_rows(const Matrix& states, double tol) const {
  Matrix out(states.rows(), eq_dim());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    out.row(i) = reduce(states.row(i).transpose(), tol).transpose();
  }
  return out;
}

Matrix EquilibriumSpace::embed_rows(const Matrix& reduced) const {
  if (reduced.cols() != eq_dim()) throw Error("embed: dimension mismatch");
  return reduced * basis_.transpose();
}

EquilibriumSpace equilibrium_space(const LTISystem& sys, double tol) {
  const Eigen::Index d = sys.dim();
  Eigen::JacobiSVD<Matrix> svd(sys.A, Eigen::ComputeFullV);
  const Vector sv = svd.singularValues();
  const double sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= tol * sigma_max) ++p;
  }
  if (p == 0) {
    throw TrivialEquilibriumError("trivial equilibrium set: ker(A) = {0}");
  }

  // Projector onto the kernel from the trailing right-singular vectors.
  const Matrix K = svd.matrixV().rightCols(p);
  Matrix P = K * K.transpose();
  P = 0.5 * (P + P.transpose());

  // Canonical basis: pivoted modified Gram-Schmidt over the projections
  // P e_1, ..., P e_d. The result depends only on the subspace, which keeps
  // reductions reproducible across runs and SVD implementations.
  Matrix basis(d, p);
  Matrix residuals = P;  // column i = current residual of P e_i
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::Index pivot = -1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double norm = residuals.col(i).norm();
      if (norm > best) {
        best = norm;
        pivot = i;
      }
    }
    if (pivot < 0 || best < 1e-12) {
      throw Error("kernel basis extraction lost rank");
    }
    used[static_cast<std::size_t>(pivot)] = true;
    Vector q = residuals.col(pivot) / best;
    // Re-orthogonalize once against the accepted columns.
    if (k > 0) {
      q -= basis.leftCols(k) * (basis.leftCols(k).transpose() * q);
      q /= q.norm();
    }
    // Sign fix: first entry of significant magnitude is positive.
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(q(i)) > 1e-9) {
        if (q(i) < 0) q = -q;
        break;
      }
    }
    basis.col(k) = q;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!used[static_cast<std::size_t>(i)]) {
        residuals.col(i) -= q * q.dot(residuals.col(i));
      }
    }
  }
  return EquilibriumSpace(std::move(basis));
}

}  // namespace eqot
