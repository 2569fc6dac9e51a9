#include "eqot/flow.hpp"

#include <algorithm>
#include <cmath>

#include "eqot/quadrature.hpp"

namespace eqot {

namespace {

/// Minimum-energy trajectory pieces: γ(t) = E_t x + S_t (y - e^{A} x) with
/// E_t = e^{At} and S_t = [∫₀ᵗ e^{A(t-τ)} B Bᵀ e^{Aᵀ(1-τ)} dτ] W⁻¹.
std::pair<Matrix, Matrix> min_energy_state_matrices(const Matrix& A,
                                                    const Matrix& B,
                                                    const Matrix& W_inv,
                                                    double t) {
  const Eigen::Index d = A.rows();
  const Matrix Et = expm(A * t);
  Matrix St = Matrix::Zero(d, d);
  if (t > 0.0) {
    for (const auto& [tau, w] : gauss_legendre(64).mapped(0.0, t)) {
      const Matrix C1 = expm(A * (t - tau)) * B;
      const Matrix C2 = expm(A * (1.0 - tau)) * B;
      St.noalias() += w * (C1 * C2.transpose());
    }
    St = St * W_inv;
  }
  return {Et, St};
}

/// State-space affine representation of the optimal trajectory:
/// γ(t) = K1(t) x + K2(t) y.
std::pair<Matrix, Matrix> steering_matrices(const CostModel& cm, double t) {
  const LTISystem& sys = cm.system();
  const Eigen::Index d = sys.dim();
  if (cm.kind() == CostKind::MinEnergy) {
    const auto [Et, St] =
        min_energy_state_matrices(sys.A, sys.B, cm.gramian().W_inv, t);
    return {Et - St * cm.state_transition(), St};
  }
  // LQ: γ(t) = Φ11(t) x + Φ12(t) λ0 with λ0 = Φ12(1)⁻¹ (y - Φ11(1) x).
  const Matrix Ht = expm(cm.hamiltonian() * t);
  const Matrix phi11_t = Ht.topLeftCorner(d, d);
  const Matrix phi12_t = Ht.topRightCorner(d, d);
  const Matrix P = phi12_t * Eigen::PartialPivLU<Matrix>(cm.phi12())
                                 .solve(Matrix::Identity(d, d));
  return {phi11_t - P * cm.phi11(), P};
}

double endpoint_scale(const Vector& x, const Vector& y) {
  return 1.0 + x.norm() + y.norm();
}

void require_equilibrium(const LTISystem& sys, const Vector& v,
                         const char* label, double tol) {
  const double res = (sys.A * v).norm();
  const double scale = std::max(1.0, sys.A.norm() * v.norm());
  if (res > tol * scale) {
    throw OffEquilibriumError(std::string(label) +
                                  " is not an equilibrium point (residual " +
                                  std::to_string(res) + ")",
                              res);
  }
}

}  // namespace

std::function<Vector(double)> state_trajectory(
    const LTISystem& sys, const Vector& x,
    std::function<Vector(double)> control, int quad_nodes) {
  if (x.size() != sys.dim()) throw Error("state_trajectory: bad x dimension");
  const LTISystem system = sys;
  return [system, x, control = std::move(control), quad_nodes](double t) {
    Vector state = expm(system.A * t) * x;
    if (t != 0.0) {
      for (const auto& [tau, w] : gauss_legendre(quad_nodes).mapped(0.0, t)) {
        state.noalias() +=
            w * (expm(system.A * (t - tau)) * (system.B * control(tau)));
      }
    }
    return state;
  };
}

double trajectory_cost(const SteeringSolution& sol,
                       const RunningCostSpec& spec, int quad_nodes) {
  double acc = 0.0;
  for (const auto& [t, w] : gauss_legendre(quad_nodes).mapped(0.0, 1.0)) {
    const Vector u = sol.control(t);
    double value = u.dot(spec.Ru * u);
    if (spec.kind == CostKind::LQ && spec.Q.size() > 0) {
      const Vector s = sol.state(t);
      value += s.dot(spec.Q * s);
    }
    acc += w * value;
  }
  return acc;
}

SteeringSolution steering_control(const CostModel& cm, const Vector& x,
                                  const Vector& y) {
  if (cm.kind() != CostKind::MinEnergy) {
    throw Error("steering_control: MinEnergy cost model required");
  }
  const LTISystem& sys = cm.system();
  if (x.size() != sys.dim() || y.size() != sys.dim()) {
    throw Error("steering_control: endpoint dimension mismatch");
  }
  const Vector lambda = cm.gramian().W_inv * (y - cm.state_transition() * x);
  const Matrix At = sys.A.transpose();
  const Matrix Bt = sys.B.transpose();

  SteeringSolution sol{sys, x, y, {}, {}, 0.0};
  sol.control = [At, Bt, lambda](double t) -> Vector {
    return Bt * (expm(At * (1.0 - t)) * lambda);
  };
  const Matrix A = sys.A;
  const Matrix B = sys.B;
  const Matrix W_inv = cm.gramian().W_inv;
  const Vector delta = y - cm.state_transition() * x;
  sol.state = [A, B, W_inv, x, delta](double t) -> Vector {
    const auto [Et, St] = min_energy_state_matrices(A, B, W_inv, t);
    return Et * x + St * delta;
  };
  sol.cost = trajectory_cost(sol, cm.spec());

  const Vector reached = sol.state(1.0);
  if ((reached - y).norm() > 1e-8 * endpoint_scale(x, y)) {
    throw SteeringError("steering_control: endpoint contract violated");
  }
  return sol;
}

SteeringSolution lq_steering(const CostModel& cm, const Vector& x,
                             const Vector& y) {
  if (cm.kind() != CostKind::LQ) {
    throw Error("lq_steering: LQ cost model required");
  }
  const LTISystem& sys = cm.system();
  if (x.size() != sys.dim() || y.size() != sys.dim()) {
    throw Error("lq_steering: endpoint dimension mismatch");
  }
  const Eigen::Index d = sys.dim();
  const Vector lambda0 = cm.lq_costate(x, y);
  const Matrix H = cm.hamiltonian();
  const Matrix gain =
      Eigen::LLT<Matrix>(cm.spec().Ru).solve(sys.B.transpose());

  Vector z0(2 * d);
  z0.head(d) = x;
  z0.tail(d) = lambda0;

  SteeringSolution sol{sys, x, y, {}, {}, 0.0};
  sol.control = [H, gain, z0, d](double t) -> Vector {
    const Vector zt = expm(H * t) * z0;
    return -gain * zt.tail(d);
  };
  sol.state = [H, z0, d](double t) -> Vector {
    const Vector zt = expm(H * t) * z0;
    return zt.head(d);
  };
  sol.cost = trajectory_cost(sol, cm.spec());

  const Vector reached = sol.state(1.0);
  if ((reached - y).norm() > 1e-8 * endpoint_scale(x, y)) {
    throw SteeringError("lq_steering: endpoint contract violated");
  }
  return sol;
}

SteeringSolution reverse_trajectory(const SteeringSolution& sol, double tol) {
  require_equilibrium(sol.system, sol.x, "x", tol);
  require_equilibrium(sol.system, sol.y, "y", tol);
  // γ̃(t) = -γ(t) + x + y solves the system under control -u and runs from y
  // to x; A(x + y) = 0 is what makes the substitution close.
  SteeringSolution rev{sol.system, sol.y, sol.x, {}, {}, sol.cost};
  const Vector shift = sol.x + sol.y;
  const auto control = sol.control;
  const auto state = sol.state;
  rev.control = [control](double t) -> Vector { return -control(t); };
  rev.state = [state, shift](double t) -> Vector { return shift - state(t); };
  return rev;
}

std::pair<Matrix, Matrix> interpolation_matrices(const CostModel& cm,
                                                 const EquilibriumSpace& es,
                                                 double t) {
  const auto [K1, K2] = steering_matrices(cm, t);
  const Matrix& basis = es.embed_map();
  return {basis.transpose() * K1 * basis, basis.transpose() * K2 * basis};
}

namespace {

/// Quantize to the 2^-40 lattice. Interpolation operators that agree
/// analytically then agree bitwise across systems, which makes frame output
/// reproducible between, e.g., a double integrator and its Euclidean
/// baseline.
Matrix snap_lattice(Matrix M) {
  constexpr double kLattice = 1099511627776.0;  // 2^40
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      M(i, j) = std::round(M(i, j) * kLattice) / kLattice;
    }
  }
  return M;
}

}  // namespace

FrameSet displacement_interpolate(const CostModel& cm,
                                  const EquilibriumSpace& es,
                                  const Matrix& src_reduced,
                                  const Matrix& dst_reduced,
                                  const Vector& weights,
                                  const std::vector<double>& times,
                                  const std::vector<int>& grid,
                                  double bandwidth, const Box& box,
                                  bool keep_particles) {
  const Eigen::Index n = src_reduced.rows();
  const Eigen::Index p = src_reduced.cols();
  if (dst_reduced.rows() != n || dst_reduced.cols() != p ||
      weights.size() != n) {
    throw Error("displacement_interpolate: matched cloud shape mismatch");
  }
  if (box.dim() != p) {
    throw Error("displacement_interpolate: box dimension mismatch");
  }

  FrameSet out;
  out.times = times;
  std::sort(out.times.begin(), out.times.end());
  out.grid = grid;
  out.bandwidth = bandwidth;
  out.n_particles = n;
  out.frames.reserve(out.times.size());

  for (double t : out.times) {
    const auto [G1_raw, G2_raw] = interpolation_matrices(cm, es, t);
    const Matrix G1 = snap_lattice(G1_raw);
    const Matrix G2 = snap_lattice(G2_raw);
    DiscreteMeasure frame_cloud;
    frame_cloud.points = src_reduced * G1.transpose() + dst_reduced * G2.transpose();
    frame_cloud.weights = weights;
    frame_cloud.domain = box;
    // Lattice rounding can push boundary particles out by ~1e-13; fold those
    // back instead of clipping them.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index a = 0; a < p; ++a) {
        const double slack = 1e-9 * (box.hi(a) - box.lo(a));
        double& v = frame_cloud.points(i, a);
        if (v < box.lo(a) && v > box.lo(a) - slack) v = box.lo(a);
        if (v > box.hi(a) && v < box.hi(a) + slack) v = box.hi(a);
      }
    }
    out.frames.push_back(rasterize(frame_cloud, grid, bandwidth));
    if (keep_particles) out.particle_positions.push_back(frame_cloud.points);
  }
  return out;
}

}  // namespace eqot
