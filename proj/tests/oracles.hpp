// Test-only reference implementations, kept independent of the library's
// computational paths so they can serve as oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace eqot_test {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Matrix exponential by scaled Taylor series (independent of the Padé
/// scaling-and-squaring path in the library).
inline MatrixXd taylor_expm(const MatrixXd& M) {
  const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  }
  const MatrixXd A = M / std::pow(2.0, squarings);
  MatrixXd term = MatrixXd::Identity(M.rows(), M.cols());
  MatrixXd sum = term;
  for (int k = 1; k <= 40; ++k) {
    term = term * A / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Unit-horizon controllability Gramian through the augmented block
/// exponential: with C = [[-A, BB'], [0, A']], e^C = [[F11, F12], [0, F22]]
/// and W = F22' F12.
inline MatrixXd vanloan_gramian(const MatrixXd& A, const MatrixXd& B) {
  const Eigen::Index d = A.rows();
  MatrixXd C = MatrixXd::Zero(2 * d, 2 * d);
  C.topLeftCorner(d, d) = -A;
  C.topRightCorner(d, d) = B * B.transpose();
  C.bottomRightCorner(d, d) = A.transpose();
  const MatrixXd F = taylor_expm(C);
  return F.bottomRightCorner(d, d).transpose() * F.topRightCorner(d, d);
}

/// Exhaustive minimum-cost assignment; returns the lexicographically
/// smallest optimal permutation. Only for small n.
inline std::pair<std::vector<Eigen::Index>, double> brute_force_assignment(
    const MatrixXd& C) {
  const Eigen::Index n = C.rows();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Eigen::Index> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      cost += C(i, perm[static_cast<std::size_t>(i)]);
    }
    if (cost < best_cost - 1e-15) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_cost};
}

/// Minimum-energy cost by dense direct transcription with piecewise-constant
/// controls on N steps: min Δt Σ|u_k|² subject to the exactly discretized
/// dynamics reaching y.
inline double transcription_min_energy(const MatrixXd& A, const MatrixXd& B,
                                       const VectorXd& x, const VectorXd& y,
                                       int N) {
  const Eigen::Index d = A.rows();
  const double dt = 1.0 / N;
  const MatrixXd Phi = taylor_expm(A * dt);
  // Gamma = ∫₀^dt e^{As} B ds by fine midpoint quadrature.
  MatrixXd Gamma = MatrixXd::Zero(d, B.cols());
  const int sub = 64;
  for (int k = 0; k < sub; ++k) {
    const double s = (k + 0.5) * dt / sub;
    Gamma += taylor_expm(A * s) * B * (dt / sub);
  }
  // G = Σ_k M_k M_k' with M_k = Phi^{N-1-k} Gamma, accumulated backwards.
  MatrixXd G = MatrixXd::Zero(d, d);
  MatrixXd Mk = Gamma;
  for (int k = N - 1; k >= 0; --k) {
    G += Mk * Mk.transpose();
    if (k > 0) Mk = Phi * Mk;
  }
  MatrixXd PhiN = MatrixXd::Identity(d, d);
  for (int k = 0; k < N; ++k) PhiN = Phi * PhiN;
  const VectorXd r = y - PhiN * x;
  return dt * r.dot(G.ldlt().solve(r));
}

/// LQ cost by dense direct transcription: piecewise-constant controls,
/// trapezoidal state cost, equality-constrained QP solved through its KKT
/// system.
inline double transcription_lq(const MatrixXd& A, const MatrixXd& B,
                               const MatrixXd& Q, const MatrixXd& Ru,
                               const VectorXd& x, const VectorXd& y, int N) {
  const Eigen::Index d = A.rows();
  const Eigen::Index m = B.cols();
  const double dt = 1.0 / N;
  const MatrixXd Phi = taylor_expm(A * dt);
  MatrixXd Gamma = MatrixXd::Zero(d, m);
  const int sub = 64;
  for (int k = 0; k < sub; ++k) {
    const double s = (k + 0.5) * dt / sub;
    Gamma += taylor_expm(A * s) * B * (dt / sub);
  }

  // γ_k = Phi^k x + S_k U with S_k picking up Phi^{k-1-j} Gamma blocks.
  std::vector<MatrixXd> phi_pow(static_cast<std::size_t>(N + 1));
  phi_pow[0] = MatrixXd::Identity(d, d);
  for (int k = 1; k <= N; ++k) phi_pow[static_cast<std::size_t>(k)] = Phi * phi_pow[static_cast<std::size_t>(k - 1)];

  const Eigen::Index nu = m * N;
  std::vector<MatrixXd> S(static_cast<std::size_t>(N + 1),
                          MatrixXd::Zero(d, nu));
  for (int k = 1; k <= N; ++k) {
    for (int j = 0; j < k; ++j) {
      S[static_cast<std::size_t>(k)].middleCols(m * j, m) =
          phi_pow[static_cast<std::size_t>(k - 1 - j)] * Gamma;
    }
  }

  MatrixXd H = MatrixXd::Zero(nu, nu);
  VectorXd g = VectorXd::Zero(nu);
  double constant = 0.0;
  // Trapezoidal weights on the state cost.
  for (int k = 0; k <= N; ++k) {
    const double w = (k == 0 || k == N) ? 0.5 * dt : dt;
    const VectorXd xk = phi_pow[static_cast<std::size_t>(k)] * x;
    const MatrixXd& Sk = S[static_cast<std::size_t>(k)];
    H += w * 2.0 * (Sk.transpose() * Q * Sk);
    g += w * 2.0 * (Sk.transpose() * (Q * xk));
    constant += w * xk.dot(Q * xk);
  }
  for (int k = 0; k < N; ++k) {
    H.block(m * k, m * k, m, m) += dt * 2.0 * Ru;
  }

  // Constraint S_N U = y - Phi^N x; KKT solve.
  const MatrixXd& SN = S[static_cast<std::size_t>(N)];
  const VectorXd r = y - phi_pow[static_cast<std::size_t>(N)] * x;
  MatrixXd KKT = MatrixXd::Zero(nu + d, nu + d);
  KKT.topLeftCorner(nu, nu) = H;
  KKT.topRightCorner(nu, d) = SN.transpose();
  KKT.bottomLeftCorner(d, nu) = SN;
  VectorXd rhs(nu + d);
  rhs.head(nu) = -g;
  rhs.tail(d) = r;
  const VectorXd sol = KKT.fullPivLu().solve(rhs);
  const VectorXd U = sol.head(nu);
  return 0.5 * U.dot(H * U) + g.dot(U) + constant;
}

}  // namespace eqot_test
