#pragma once

#include <functional>
#include <vector>

#include "eqot/costs.hpp"
#include "eqot/measures.hpp"

namespace eqot {

/// Open-loop steering between two states over the unit horizon, with
/// samplers for the optimal control and the resulting state trajectory.
struct SteeringSolution {
  LTISystem system;
  Vector x, y;  // endpoints: state(0) = x, state(1) = y
  std::function<Vector(double)> control;
  std::function<Vector(double)> state;
  double cost = 0.0;
};

/// Minimum-energy steering u(t) = Bᵀ e^{Aᵀ(1-t)} W⁻¹ (y - e^{A} x). The sign
/// and argument arrangement are pinned by the endpoint contract: state(1) = y
/// is verified numerically at construction.
SteeringSolution steering_control(const CostModel& cm, const Vector& x,
                                  const Vector& y);

/// Variation-of-constants sampler
/// γ(t) = e^{At} x + ∫₀ᵗ e^{A(t-τ)} B u(τ) dτ (Gauss-Legendre in τ).
std::function<Vector(double)> state_trajectory(
    const LTISystem& sys, const Vector& x,
    std::function<Vector(double)> control, int quad_nodes = 64);

/// Trajectory reversal: γ̃(t) = -γ(t) + x + y under control -u steers y back
/// to x when both endpoints are equilibria. Throws OffEquilibriumError
/// otherwise. The reversed solution has endpoints (y, x) and, for even
/// running costs, the same cost.
SteeringSolution reverse_trajectory(const SteeringSolution& sol,
                                    double tol = 1e-8);

/// LQ steering through the Hamiltonian flow; cost matches lq_cost.
SteeringSolution lq_steering(const CostModel& cm, const Vector& x,
                             const Vector& y);

/// 64-node quadrature of the running cost along the solution samplers.
double trajectory_cost(const SteeringSolution& sol,
                       const RunningCostSpec& spec, int quad_nodes = 64);

/// Reduced-coordinate interpolation operator at time t: for equilibrium
/// endpoints, position(t) = G1 wx + G2 wy along the optimal trajectory.
std::pair<Matrix, Matrix> interpolation_matrices(const CostModel& cm,
                                                 const EquilibriumSpace& es,
                                                 double t);

/// Density snapshots of a transported measure along optimal trajectories.
struct FrameSet {
  std::vector<double> times;
  std::vector<DensityGrid> frames;
  std::vector<Matrix> particle_positions;  // filled on request
  std::vector<int> grid;
  double bandwidth = 0.0;
  Eigen::Index n_particles = 0;
};

/// Pushes each matched pair (src, dst) along its optimal trajectory and
/// rasterizes the reduced positions at the requested times. The
/// interpolation operators are quantized to a fixed binary lattice so that
/// systems with analytically equal interpolants produce bit-identical
/// frames.
FrameSet displacement_interpolate(const CostModel& cm,
                                  const EquilibriumSpace& es,
                                  const Matrix& src_reduced,
                                  const Matrix& dst_reduced,
                                  const Vector& weights,
                                  const std::vector<double>& times,
                                  const std::vector<int>& grid,
                                  double bandwidth, const Box& box,
                                  bool keep_particles = false);

}  // namespace eqot
