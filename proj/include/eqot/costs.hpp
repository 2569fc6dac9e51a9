#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "eqot/linsys.hpp"

namespace eqot {

enum class CostKind { MinEnergy, LQ };

/// Running cost L(γ, u) = γᵀ Q γ + uᵀ Ru u. MinEnergy is the special case
/// Q = 0, Ru = I. The coercivity/strong-convexity constants are metadata
/// only; no computation consumes them.
struct RunningCostSpec {
  CostKind kind = CostKind::MinEnergy;
  Matrix Q;   // d x d, symmetric PSD (LQ only)
  Matrix Ru;  // m x m, symmetric PD
  std::optional<double> coercivity_theta;
  std::optional<double> strong_convexity_lambda;

  static RunningCostSpec min_energy(Eigen::Index m);
  static RunningCostSpec lq(Matrix Q, Matrix Ru);

  /// Symmetry and definiteness checks against the system dimensions.
  void validate(Eigen::Index d, Eigen::Index m) const;
};

/// max |(Q P_perp - Q)_ij|, the structural condition that the state cost only
/// sees non-equilibrium variables. Zero (to tolerance) is required for the
/// cost to be translation invariant on E.
double q_structure_residual(const RunningCostSpec& spec,
                            const EquilibriumSpace& es);

/// Point-to-point optimal control cost between states over the unit horizon.
/// MinEnergy evaluates the Gramian quadratic form; LQ solves the two-point
/// boundary problem through the Hamiltonian flow.
class CostModel {
 public:
  CostModel(LTISystem sys, RunningCostSpec spec);

  double cost(const Vector& x, const Vector& y) const;
  double min_energy_cost(const Vector& x, const Vector& y) const;
  double lq_cost(const Vector& x, const Vector& y) const;

  const LTISystem& system() const { return system_; }
  const RunningCostSpec& spec() const { return spec_; }
  CostKind kind() const { return spec_.kind; }

  // MinEnergy pieces.
  const Gramian& gramian() const;
  const Matrix& state_transition() const { return expA_; }  // e^{A}

  // LQ pieces: Φ = e^{H}, H = [[A, -B Ru⁻¹ Bᵀ], [-Q, -Aᵀ]].
  const Matrix& hamiltonian() const;
  const Matrix& hamiltonian_exp() const;
  Matrix phi11() const;
  Matrix phi12() const;
  double phi12_condition() const;

  /// Initial costate of the LQ boundary solve: λ₀ = Φ₁₂⁻¹ (y - Φ₁₁ x).
  Vector lq_costate(const Vector& x, const Vector& y) const;

  /// State/costate pair along the Hamiltonian flow at time t.
  std::pair<Vector, Vector> lq_flow(const Vector& x, const Vector& lambda0,
                                    double t) const;

 private:
  LTISystem system_;
  RunningCostSpec spec_;
  Matrix expA_;
  std::optional<Gramian> gramian_;
  // LQ only.
  Matrix hamiltonian_;
  Matrix phi_;
  Matrix control_gain_;  // Ru⁻¹ Bᵀ
  std::vector<Matrix> hflow_nodes_;  // e^{H t} at the 64 quadrature nodes
  std::shared_ptr<Eigen::PartialPivLU<Matrix>> phi12_lu_;
  double phi12_condition_ = 0.0;
};

/// Reduced displacement cost h̃(w) = wᵀ M w on equilibrium coordinates.
struct ReducedCost {
  enum class Provenance { GramianRestriction, Polarization };
  Matrix M;
  Provenance provenance = Provenance::GramianRestriction;

  double evaluate(const Vector& w) const { return w.dot(M * w); }
};

/// Reduced quadratic form of the transport cost: M = basisᵀ W⁻¹ basis for
/// MinEnergy, polarization of the displacement cost for LQ. Throws
/// NotConvexError when M is not positive definite.
ReducedCost reduced_quadratic(const CostModel& cm, const EquilibriumSpace& es);

/// Endpoint-quadratic form c(x, y) = wₓᵀ Dm wₓ - wₓᵀ Em w_y + w_yᵀ Fm w_y in
/// equilibrium coordinates.
struct QuadraticCostForm {
  Matrix Dm, Em, Fm;
};

/// Extracts (Dm, Em, Fm) by polarization over the equilibrium basis and
/// verifies the reconstruction on random pairs. Throws NotQuadraticError when
/// the reconstruction error exceeds 1e-6 relative.
QuadraticCostForm quadratic_form_extract(const CostModel& cm,
                                         const EquilibriumSpace& es);

/// Max over sampled equilibrium triples (x, y, z) of
/// |c(x+z, y+z) - c(x, y)| / (1 + |c(x, y)|). Diagnostic only: large values
/// flag running costs that depend on equilibrium variables.
double translation_invariance_probe(const CostModel& cm,
                                    const EquilibriumSpace& es, int n_samples,
                                    std::uint64_t seed);

/// λ_min(M); strict convexity is certified iff the result is positive.
double convexity_certificate(const ReducedCost& rc);

}  // namespace eqot
