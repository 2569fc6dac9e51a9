#pragma once

#include <cstdint>
#include <vector>

#include "eqot/costs.hpp"
#include "eqot/measures.hpp"

namespace eqot {

enum class PlanMode { Permutation, Coupling };
enum class Backend { Auto, Exact, Entropic };

/// Discrete transport problem on reduced coordinates.
struct TransportProblem {
  DiscreteMeasure mu, nu;
  ReducedCost cost;
};

/// Entropic solver parameters. epsilon_final <= 0 selects the automatic
/// value 1e-3 * max cost-matrix entry.
struct SolverParams {
  double epsilon_final = 0.0;
  double epsilon_decay = 0.5;  // multiplicative schedule factor, in (0, 1)
  int max_iterations = 100000;
  double marginal_tolerance = 1e-7;

  void validate() const;
};

/// Transport plan with optimality evidence. Permutation solutions carry dual
/// potentials certifying complementary slackness; couplings carry marginal
/// residuals.
struct TransportSolution {
  PlanMode mode = PlanMode::Permutation;
  std::vector<Eigen::Index> permutation;  // Permutation mode
  Matrix coupling;                        // Coupling mode, n x n'
  double total_cost = 0.0;
  Vector dual_u, dual_v;
  double residual_mu = 0.0;
  double residual_nu = 0.0;
  int iterations = 0;

  /// Primal cost minus dual objective (permutation mode).
  double duality_gap(const Matrix& cost_matrix) const;
  /// Most negative reduced cost c_ij - u_i - v_j (permutation mode).
  double min_slack(const Matrix& cost_matrix) const;
};

/// Pairwise cost matrix C_ij = h̃(x_i - y_j).
Matrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                   const ReducedCost& rc);

/// Minimum-cost assignment of a square matrix (shortest augmenting paths with
/// dual updates). Equal-cost matchings are resolved toward the
/// lexicographically smallest permutation by a deterministic sub-tolerance
/// perturbation on the scale-normalized matrix.
TransportSolution exact_assignment(const Matrix& cost);

/// Quantile (monotone) coupling for p = 1 and a strictly convex reduced cost.
/// Returns a permutation for equal-size equal-weight inputs, otherwise the
/// north-west-corner coupling over sorted atoms.
TransportSolution monotone_1d(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const ReducedCost& rc);

/// Log-domain Sinkhorn with multiplicative epsilon scaling from
/// 0.1 * max(C) down to epsilon_final. Returns the coupling, potentials and
/// the plan cost (entropy excluded). Throws ConvergenceError when the
/// marginal tolerance is not reached within max_iterations.
TransportSolution sinkhorn(const Matrix& cost, const Vector& mu_weights,
                           const Vector& nu_weights, const SolverParams& params);
TransportSolution sinkhorn(const TransportProblem& problem,
                           const SolverParams& params);

/// Barycentric map samples T(x_i) = Σ_j π_ij y_j / μ_i; permutation solutions
/// return the matched targets exactly.
Matrix barycentric_map(const TransportSolution& sol, const Matrix& nu_points);

/// End-to-end solve options.
struct SolveOptions {
  SolverParams solver;
  Backend backend = Backend::Auto;
  Eigen::Index exact_cap = 2048;
  Eigen::Index n = 256;
  SampleMode mode = SampleMode::MonteCarlo;
  std::uint64_t seed = 0;
};

struct SolveResult {
  TransportSolution solution;
  Backend backend_used = Backend::Exact;
  DiscreteMeasure mu, nu;
  ReducedCost reduced_cost;
  Matrix map_points;  // n x p transport targets per source point
  Matrix src_states;  // n x d embedded sources
  Matrix dst_states;  // n x d embedded targets
};

/// Reduce -> classical OT -> embed pipeline: discretizes both specs, checks
/// strict convexity of the reduced cost, solves with the exact backend for
/// equal-weight equal-size problems up to exact_cap (entropic otherwise), and
/// embeds the matched endpoints back into state space.
SolveResult solve_transport(const LTISystem& sys, const EquilibriumSpace& es,
                            const CostModel& cm, const MeasureSpec& mu_spec,
                            const MeasureSpec& nu_spec,
                            const SolveOptions& opts);

}  // namespace eqot
