#include "eqot/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "eqot/parallel.hpp"

namespace eqot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Index-keyed perturbation preferring small columns in early rows. The
/// cascade weight c^-(i+1) with c = n^2 makes row i dominate all later rows,
/// so equal-cost matchings resolve to the lexicographically smallest
/// permutation (until the weights underflow, where the result is still
/// deterministic).
double tie_break(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
  constexpr double kTieEps = 1e-10;
  const double c = static_cast<double>(n) * static_cast<double>(n);
  const double w = std::pow(c, -static_cast<double>(i + 1));
  return kTieEps * w * static_cast<double>(j);
}

}  // namespace

void SolverParams::validate() const {
  if (epsilon_decay <= 0.0 || epsilon_decay >= 1.0) {
    throw Error("solver: epsilon_decay must be in (0, 1)");
  }
  if (max_iterations < 1) throw Error("solver: max_iterations must be >= 1");
  if (marginal_tolerance <= 0.0) {
    throw Error("solver: marginal_tolerance must be > 0");
  }
}

double TransportSolution::duality_gap(const Matrix& cost_matrix) const {
  if (mode != PlanMode::Permutation) {
    throw Error("duality_gap: permutation mode only");
  }
  double primal = 0.0;
  for (Eigen::Index i = 0; i < cost_matrix.rows(); ++i) {
    primal += cost_matrix(i, permutation[static_cast<std::size_t>(i)]);
  }
  return primal - (dual_u.sum() + dual_v.sum());
}

double TransportSolution::min_slack(const Matrix& cost_matrix) const {
  if (mode != PlanMode::Permutation) {
    throw Error("min_slack: permutation mode only");
  }
  double worst = kInf;
  for (Eigen::Index i = 0; i < cost_matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < cost_matrix.cols(); ++j) {
      worst = std::min(worst, cost_matrix(i, j) - dual_u(i) - dual_v(j));
    }
  }
  return worst;
}

Matrix cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                   const ReducedCost& rc) {
  if (mu.dim() != nu.dim() || rc.M.rows() != mu.dim()) {
    throw Error("cost_matrix: dimension mismatch");
  }
  // C_ij = x_i'Mx_i + y_j'My_j - 2 x_i'My_j for symmetric M.
  const Matrix MX = mu.points * rc.M;  // n x p
  const Vector qx = (MX.array() * mu.points.array()).rowwise().sum();
  const Vector qy =
      ((nu.points * rc.M).array() * nu.points.array()).rowwise().sum();
  Matrix C = (-2.0 * MX * nu.points.transpose()).colwise() + qx;
  C.rowwise() += qy.transpose();
  return C.cwiseMax(0.0);
}

TransportSolution exact_assignment(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  if (n != cost.cols()) {
    throw Error("exact_assignment: cost matrix must be square");
  }
  if (!cost.allFinite()) {
    throw Error("exact_assignment: non-finite cost entries");
  }

  const double scale = std::max(cost.cwiseAbs().maxCoeff(), 1e-300);
  Matrix C = cost / scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      C(i, j) += tie_break(i, j, n);
    }
  }

  // Shortest augmenting paths with dual updates (Jonker-Volgenant scheme).
  Vector u = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  std::vector<Eigen::Index> col4row(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> row4col(static_cast<std::size_t>(n), -1);
  std::vector<double> shortest(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> path(static_cast<std::size_t>(n));
  std::vector<bool> scanned_row(static_cast<std::size_t>(n));
  std::vector<bool> scanned_col(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(n));

  for (Eigen::Index cur_row = 0; cur_row < n; ++cur_row) {
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::fill(path.begin(), path.end(), -1);
    std::fill(scanned_row.begin(), scanned_row.end(), false);
    std::fill(scanned_col.begin(), scanned_col.end(), false);
    std::iota(remaining.begin(), remaining.end(), 0);
    Eigen::Index n_remaining = n;

    double min_val = 0.0;
    Eigen::Index i = cur_row;
    Eigen::Index sink = -1;
    while (sink == -1) {
      scanned_row[static_cast<std::size_t>(i)] = true;
      Eigen::Index best_it = -1;
      double lowest = kInf;
      const double ui = u(i);
      for (Eigen::Index it = 0; it < n_remaining; ++it) {
        const Eigen::Index j = remaining[static_cast<std::size_t>(it)];
        const double r = min_val + C(i, j) - ui - v(j);
        auto& sj = shortest[static_cast<std::size_t>(j)];
        if (r < sj) {
          sj = r;
          path[static_cast<std::size_t>(j)] = i;
        }
        if (sj < lowest) {
          lowest = sj;
          best_it = it;
        }
      }
      if (best_it < 0 || lowest == kInf) {
        throw Error("exact_assignment: infeasible cost matrix");
      }
      const Eigen::Index j = remaining[static_cast<std::size_t>(best_it)];
      min_val = lowest;
      scanned_col[static_cast<std::size_t>(j)] = true;
      remaining[static_cast<std::size_t>(best_it)] =
          remaining[static_cast<std::size_t>(--n_remaining)];
      if (row4col[static_cast<std::size_t>(j)] == -1) {
        sink = j;
      } else {
        i = row4col[static_cast<std::size_t>(j)];
      }
    }

    u(cur_row) += min_val;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (scanned_row[static_cast<std::size_t>(r)] && r != cur_row) {
        u(r) += min_val -
                shortest[static_cast<std::size_t>(
                    col4row[static_cast<std::size_t>(r)])];
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (scanned_col[static_cast<std::size_t>(j)]) {
        v(j) -= min_val - shortest[static_cast<std::size_t>(j)];
      }
    }

    Eigen::Index j = sink;
    while (true) {
      const Eigen::Index r = path[static_cast<std::size_t>(j)];
      row4col[static_cast<std::size_t>(j)] = r;
      std::swap(col4row[static_cast<std::size_t>(r)], j);
      if (r == cur_row) break;
    }
  }

  TransportSolution sol;
  sol.mode = PlanMode::Permutation;
  sol.permutation.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sol.permutation[static_cast<std::size_t>(i)] =
        col4row[static_cast<std::size_t>(i)];
    total += cost(i, col4row[static_cast<std::size_t>(i)]);
  }
  sol.total_cost = total;
  sol.dual_u = u * scale;
  sol.dual_v = v * scale;
  sol.residual_mu = 0.0;
  sol.residual_nu = 0.0;
  sol.iterations = static_cast<int>(n);
  return sol;
}

TransportSolution monotone_1d(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu,
                              const ReducedCost& rc) {
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw Error("monotone_1d: measures must be one-dimensional");
  }
  if (!(rc.M(0, 0) > 0.0)) {
    throw NotConvexError("monotone_1d: reduced cost is not strictly convex",
                         rc.M(0, 0));
  }
  const Eigen::Index n = mu.size();
  const Eigen::Index m = nu.size();
  std::vector<Eigen::Index> order_mu(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> order_nu(static_cast<std::size_t>(m));
  std::iota(order_mu.begin(), order_mu.end(), 0);
  std::iota(order_nu.begin(), order_nu.end(), 0);
  const auto by_position = [](const Matrix& pts) {
    return [&pts](Eigen::Index a, Eigen::Index b) {
      return pts(a, 0) != pts(b, 0) ? pts(a, 0) < pts(b, 0) : a < b;
    };
  };
  std::sort(order_mu.begin(), order_mu.end(), by_position(mu.points));
  std::sort(order_nu.begin(), order_nu.end(), by_position(nu.points));

  const double coeff = rc.M(0, 0);
  TransportSolution sol;
  if (n == m && mu.uniform_weights() && nu.uniform_weights()) {
    sol.mode = PlanMode::Permutation;
    sol.permutation.assign(static_cast<std::size_t>(n), 0);
    double total = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index i = order_mu[static_cast<std::size_t>(k)];
      const Eigen::Index j = order_nu[static_cast<std::size_t>(k)];
      sol.permutation[static_cast<std::size_t>(i)] = j;
      const double d = mu.points(i, 0) - nu.points(j, 0);
      total += coeff * d * d / static_cast<double>(n);
    }
    sol.total_cost = total;
    return sol;
  }

  // North-west corner over sorted atoms: the quantile coupling.
  sol.mode = PlanMode::Coupling;
  sol.coupling = Matrix::Zero(n, m);
  double total = 0.0;
  Eigen::Index ki = 0, kj = 0;
  double a = mu.weights(order_mu[0]);
  double b = nu.weights(order_nu[0]);
  while (ki < n && kj < m) {
    const Eigen::Index i = order_mu[static_cast<std::size_t>(ki)];
    const Eigen::Index j = order_nu[static_cast<std::size_t>(kj)];
    const double move = std::min(a, b);
    if (move > 0.0) {
      sol.coupling(i, j) += move;
      const double d = mu.points(i, 0) - nu.points(j, 0);
      total += move * coeff * d * d;
    }
    a -= move;
    b -= move;
    if (a <= 0.0) {
      ++ki;
      if (ki < n) a = mu.weights(order_mu[static_cast<std::size_t>(ki)]);
    }
    if (b <= 0.0) {
      ++kj;
      if (kj < m) b = nu.weights(order_nu[static_cast<std::size_t>(kj)]);
    }
  }
  sol.total_cost = total;
  sol.residual_mu = (sol.coupling.rowwise().sum() - mu.weights).lpNorm<1>();
  sol.residual_nu =
      (sol.coupling.colwise().sum().transpose() - nu.weights).lpNorm<1>();
  return sol;
}

namespace {

/// f_i = -eps * LSE_j(log b_j + (g_j - C_ij) / eps), row-parallel.
void half_update(const Matrix& C, const Vector& log_other, const Vector& other_pot,
                 double eps, bool rows, Vector& out) {
  const Eigen::Index n = rows ? C.rows() : C.cols();
  out.resize(n);
  parallel_for(0, n, [&](std::int64_t k) {
    const Eigen::Index i = static_cast<Eigen::Index>(k);
    double m = -kInf;
    const Eigen::Index nj = rows ? C.cols() : C.rows();
    for (Eigen::Index j = 0; j < nj; ++j) {
      const double c = rows ? C(i, j) : C(j, i);
      const double arg = log_other(j) + (other_pot(j) - c) / eps;
      if (arg > m) m = arg;
    }
    double acc = 0.0;
    for (Eigen::Index j = 0; j < nj; ++j) {
      const double c = rows ? C(i, j) : C(j, i);
      acc += std::exp(log_other(j) + (other_pot(j) - c) / eps - m);
    }
    out(i) = -eps * (m + std::log(acc));
  });
}

}  // namespace

TransportSolution sinkhorn(const Matrix& cost, const Vector& mu_weights,
                           const Vector& nu_weights,
                           const SolverParams& params) {
  params.validate();
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  if (mu_weights.size() != n || nu_weights.size() != m) {
    throw Error("sinkhorn: weight dimensions do not match the cost matrix");
  }
  if (mu_weights.minCoeff() <= 0.0 || nu_weights.minCoeff() <= 0.0) {
    throw Error("sinkhorn: weights must be strictly positive");
  }

  const double cmax = cost.maxCoeff();
  TransportSolution sol;
  sol.mode = PlanMode::Coupling;
  if (cmax <= 0.0) {
    // Degenerate: all costs equal; the product coupling is optimal.
    sol.coupling = mu_weights * nu_weights.transpose();
    sol.dual_u = Vector::Zero(n);
    sol.dual_v = Vector::Zero(m);
    sol.total_cost = 0.0;
    return sol;
  }

  const double eps_final =
      params.epsilon_final > 0.0 ? params.epsilon_final : 1e-3 * cmax;
  const Vector log_mu = mu_weights.array().log();
  const Vector log_nu = nu_weights.array().log();

  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(m);
  Vector f_next;
  int iterations = 0;
  double residual = kInf;

  double eps = std::max(0.1 * cmax, eps_final);
  bool converged = false;
  while (!converged) {
    const bool final_level = eps <= eps_final * (1.0 + 1e-12);
    const int level_cap = final_level ? params.max_iterations : 15;
    for (int it = 0; it < level_cap; ++it) {
      half_update(cost, log_mu, f, eps, false, g);   // columns exact
      half_update(cost, log_nu, g, eps, true, f_next);
      // Row residual of the (f, g) state; f_next re-balances the rows.
      residual = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        residual +=
            mu_weights(i) * std::abs(std::expm1((f(i) - f_next(i)) / eps));
      }
      f = f_next;
      ++iterations;
      if (iterations >= params.max_iterations &&
          !(final_level && residual <= params.marginal_tolerance)) {
        throw ConvergenceError(
            "sinkhorn did not converge: marginal residual " +
                std::to_string(residual),
            residual, residual);
      }
      if (final_level && residual <= params.marginal_tolerance) {
        converged = true;
        break;
      }
      if (!final_level && residual <= params.marginal_tolerance) break;
    }
    if (!converged) eps = std::max(eps * params.epsilon_decay, eps_final);
  }

  // Assemble the coupling and report exact marginal residuals.
  sol.coupling.resize(n, m);
  parallel_for(0, n, [&](std::int64_t k) {
    const Eigen::Index i = static_cast<Eigen::Index>(k);
    for (Eigen::Index j = 0; j < m; ++j) {
      sol.coupling(i, j) = std::exp(log_mu(i) + log_nu(j) +
                                    (f(i) + g(j) - cost(i, j)) / eps);
    }
  });
  sol.total_cost = (sol.coupling.array() * cost.array()).sum();
  sol.dual_u = f;
  sol.dual_v = g;
  sol.residual_mu = (sol.coupling.rowwise().sum() - mu_weights).lpNorm<1>();
  sol.residual_nu =
      (sol.coupling.colwise().sum().transpose() - nu_weights).lpNorm<1>();
  sol.iterations = iterations;
  return sol;
}

TransportSolution sinkhorn(const TransportProblem& problem,
                           const SolverParams& params) {
  const Matrix C = cost_matrix(problem.mu, problem.nu, problem.cost);
  return sinkhorn(C, problem.mu.weights, problem.nu.weights, params);
}

Matrix barycentric_map(const TransportSolution& sol, const Matrix& nu_points) {
  if (sol.mode == PlanMode::Permutation) {
    Matrix out(static_cast<Eigen::Index>(sol.permutation.size()),
               nu_points.cols());
    for (std::size_t i = 0; i < sol.permutation.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) =
          nu_points.row(sol.permutation[i]);
    }
    return out;
  }
  // Normalizing by the realized row mass keeps each target inside the convex
  // hull of the nu support even before full marginal convergence.
  const Eigen::Index n = sol.coupling.rows();
  Matrix out(n, nu_points.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_mass = sol.coupling.row(i).sum();
    if (row_mass <= 0.0) {
      throw Error("barycentric_map: zero-mass row " + std::to_string(i));
    }
    out.row(i) = (sol.coupling.row(i) * nu_points) / row_mass;
  }
  return out;
}

SolveResult solve_transport(const LTISystem& sys, const EquilibriumSpace& es,
                            const CostModel& cm, const MeasureSpec& mu_spec,
                            const MeasureSpec& nu_spec,
                            const SolveOptions& opts) {
  if (mu_spec.dim() != es.eq_dim() || nu_spec.dim() != es.eq_dim()) {
    throw Error("solve_transport: measure dimension must equal dim E");
  }
  SolveResult result;
  result.reduced_cost = reduced_quadratic(cm, es);  // aborts when not convex

  // The same seed on both sides keeps mu = nu exactly when the specs match.
  result.mu = discretize(mu_spec, opts.n, opts.mode, opts.seed);
  result.nu = discretize(nu_spec, opts.n, opts.mode, opts.seed);

  const Matrix C = cost_matrix(result.mu, result.nu, result.reduced_cost);

  const bool exact_feasible = result.mu.size() == result.nu.size() &&
                              result.mu.uniform_weights() &&
                              result.nu.uniform_weights();
  Backend backend = opts.backend;
  if (backend == Backend::Auto) {
    backend = exact_feasible && result.mu.size() <= opts.exact_cap
                  ? Backend::Exact
                  : Backend::Entropic;
  }
  if (backend == Backend::Exact && !exact_feasible) {
    throw Error(
        "solve_transport: exact backend needs equal-size equal-weight "
        "measures");
  }

  if (backend == Backend::Exact) {
    result.solution = exact_assignment(C);
    // Assignment total to transport cost under weights 1/n. Duals stay at
    // matrix scale so the slackness certificate keeps referring to C.
    result.solution.total_cost /= static_cast<double>(result.mu.size());
  } else {
    result.solution =
        sinkhorn(C, result.mu.weights, result.nu.weights, opts.solver);
  }
  result.backend_used = backend;
  result.map_points = barycentric_map(result.solution, result.nu.points);
  result.src_states = es.embed_rows(result.mu.points);
  result.dst_states = es.embed_rows(result.map_points);
  return result;
}

}  // namespace eqot
