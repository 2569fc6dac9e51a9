#include "eqot/costs.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "eqot/quadrature.hpp"
#include "eqot/rng.hpp"

namespace eqot {

namespace {

void check_symmetric(const Matrix& M, const char* name, double tol) {
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw Error(std::string(name) + " is not symmetric");
  }
}

}  // namespace

RunningCostSpec RunningCostSpec::min_energy(Eigen::Index m) {
  RunningCostSpec spec;
  spec.kind = CostKind::MinEnergy;
  spec.Ru = Matrix::Identity(m, m);
  return spec;
}

RunningCostSpec RunningCostSpec::lq(Matrix Q, Matrix Ru) {
  RunningCostSpec spec;
  spec.kind = CostKind::LQ;
  spec.Q = std::move(Q);
  spec.Ru = std::move(Ru);
  return spec;
}

void RunningCostSpec::validate(Eigen::Index d, Eigen::Index m) const {
  if (Ru.rows() != m || Ru.cols() != m) {
    throw Error("Ru must be m x m");
  }
  check_symmetric(Ru, "Ru", 1e-12);
  Eigen::SelfAdjointEigenSolver<Matrix> ru_eig(Ru);
  if (ru_eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error("Ru must be positive definite");
  }
  if (kind == CostKind::LQ) {
    if (Q.rows() != d || Q.cols() != d) {
      throw Error("Q must be d x d");
    }
    check_symmetric(Q, "Q", 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> q_eig(Q);
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if (q_eig.eigenvalues().minCoeff() < -1e-12 * scale) {
      throw Error("Q must be positive semi-definite");
    }
  }
}

double q_structure_residual(const RunningCostSpec& spec,
                            const EquilibriumSpace& es) {
  if (spec.kind == CostKind::MinEnergy || spec.Q.size() == 0) return 0.0;
  return (spec.Q * es.projector_perp() - spec.Q).cwiseAbs().maxCoeff();
}

CostModel::CostModel(LTISystem sys, RunningCostSpec spec)
    : system_(std::move(sys)), spec_(std::move(spec)) {
  spec_.validate(system_.dim(), system_.inputs());
  expA_ = expm(system_.A);
  if (spec_.kind == CostKind::MinEnergy) {
    gramian_ = eqot::gramian(system_);
    return;
  }
  const Eigen::Index d = system_.dim();
  const Matrix ru_inv_bt =
      Eigen::LLT<Matrix>(spec_.Ru).solve(system_.B.transpose());
  control_gain_ = ru_inv_bt;
  hamiltonian_ = Matrix::Zero(2 * d, 2 * d);
  hamiltonian_.topLeftCorner(d, d) = system_.A;
  hamiltonian_.topRightCorner(d, d) = -system_.B * ru_inv_bt;
  hamiltonian_.bottomLeftCorner(d, d) = -spec_.Q;
  hamiltonian_.bottomRightCorner(d, d) = -system_.A.transpose();
  phi_ = expm(hamiltonian_);
  const Matrix p12 = phi_.topRightCorner(d, d);
  Eigen::JacobiSVD<Matrix> svd(p12);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  phi12_condition_ = smin > 0.0 ? smax / smin
                                : std::numeric_limits<double>::infinity();
  if (!(smin > 1e-12 * std::max(1.0, smax))) {
    throw SteeringError(
        "conjugate-time/steering failure: state-costate block is singular");
  }
  phi12_lu_ = std::make_shared<Eigen::PartialPivLU<Matrix>>(p12);
  const auto& rule = gauss_legendre(64).mapped(0.0, 1.0);
  hflow_nodes_.reserve(rule.size());
  for (const auto& [t, w] : rule) {
    hflow_nodes_.push_back(expm(hamiltonian_ * t));
  }
}

const Gramian& CostModel::gramian() const {
  if (!gramian_) throw Error("gramian: cost model is not MinEnergy");
  return *gramian_;
}

const Matrix& CostModel::hamiltonian() const {
  if (spec_.kind != CostKind::LQ) throw Error("hamiltonian: not an LQ model");
  return hamiltonian_;
}

const Matrix& CostModel::hamiltonian_exp() const {
  if (spec_.kind != CostKind::LQ) throw Error("hamiltonian: not an LQ model");
  return phi_;
}

Matrix CostModel::phi11() const {
  const Eigen::Index d = system_.dim();
  return hamiltonian_exp().topLeftCorner(d, d);
}

Matrix CostModel::phi12() const {
  const Eigen::Index d = system_.dim();
  return hamiltonian_exp().topRightCorner(d, d);
}

double CostModel::phi12_condition() const {
  if (spec_.kind != CostKind::LQ) throw Error("phi12: not an LQ model");
  return phi12_condition_;
}

double CostModel::cost(const Vector& x, const Vector& y) const {
  return spec_.kind == CostKind::MinEnergy ? min_energy_cost(x, y)
                                           : lq_cost(x, y);
}

double CostModel::min_energy_cost(const Vector& x, const Vector& y) const {
  if (spec_.kind != CostKind::MinEnergy) {
    throw Error("min_energy_cost: cost model is not MinEnergy");
  }
  if (x.size() != system_.dim() || y.size() != system_.dim()) {
    throw Error("min_energy_cost: dimension mismatch");
  }
  const Vector r = y - expA_ * x;
  return r.dot(gramian_->W_inv * r);
}

Vector CostModel::lq_costate(const Vector& x, const Vector& y) const {
  if (spec_.kind != CostKind::LQ) throw Error("lq_costate: not an LQ model");
  return phi12_lu_->solve(y - phi11() * x);
}

std::pair<Vector, Vector> CostModel::lq_flow(const Vector& x,
                                             const Vector& lambda0,
                                             double t) const {
  const Eigen::Index d = system_.dim();
  Vector z(2 * d);
  z.head(d) = x;
  z.tail(d) = lambda0;
  const Vector zt = expm(hamiltonian_ * t) * z;
  return {zt.head(d), zt.tail(d)};
}

double CostModel::lq_cost(const Vector& x, const Vector& y) const {
  if (spec_.kind != CostKind::LQ) throw Error("lq_cost: not an LQ model");
  if (x.size() != system_.dim() || y.size() != system_.dim()) {
    throw Error("lq_cost: dimension mismatch");
  }
  const Eigen::Index d = system_.dim();
  const Vector lambda0 = lq_costate(x, y);
  Vector z(2 * d);
  z.head(d) = x;
  z.tail(d) = lambda0;
  const auto& rule = gauss_legendre(64).mapped(0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vector zt = hflow_nodes_[i] * z;
    const Vector state = zt.head(d);
    const Vector u = -control_gain_ * zt.tail(d);
    acc += rule[i].second * (state.dot(spec_.Q * state) + u.dot(spec_.Ru * u));
  }
  return acc;
}

ReducedCost reduced_quadratic(const CostModel& cm,
                              const EquilibriumSpace& es) {
  const Eigen::Index p = es.eq_dim();
  ReducedCost rc;
  if (cm.kind() == CostKind::MinEnergy) {
    const Matrix& basis = es.embed_map();
    rc.M = basis.transpose() * cm.gramian().W_inv * basis;
    rc.provenance = ReducedCost::Provenance::GramianRestriction;
  } else {
    // Polarize h̃(w) = c(embed(w), 0) over the equilibrium basis.
    rc.M = Matrix::Zero(p, p);
    const Vector zero = Vector::Zero(es.state_dim());
    Vector diag(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      diag(i) = cm.cost(es.embed(Vector::Unit(p, i)), zero);
      rc.M(i, i) = diag(i);
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i + 1; j < p; ++j) {
        const double hij =
            cm.cost(es.embed(Vector::Unit(p, i) + Vector::Unit(p, j)), zero);
        rc.M(i, j) = rc.M(j, i) = 0.5 * (hij - diag(i) - diag(j));
      }
    }
    rc.provenance = ReducedCost::Provenance::Polarization;
  }
  rc.M = 0.5 * (rc.M + rc.M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rc.M);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (!(min_eig > 0.0)) {
    throw NotConvexError("reduced cost is not strictly convex (lambda_min = " +
                             std::to_string(min_eig) + ")",
                         min_eig);
  }
  return rc;
}

QuadraticCostForm quadratic_form_extract(const CostModel& cm,
                                         const EquilibriumSpace& es) {
  const Eigen::Index p = es.eq_dim();
  const Vector zero = Vector::Zero(es.state_dim());
  QuadraticCostForm form;
  form.Dm = Matrix::Zero(p, p);
  form.Fm = Matrix::Zero(p, p);
  form.Em = Matrix::Zero(p, p);

  const auto basis_vector = [&](Eigen::Index i) {
    return es.embed(Vector::Unit(p, i));
  };
  for (Eigen::Index i = 0; i < p; ++i) {
    form.Dm(i, i) = cm.cost(basis_vector(i), zero);
    form.Fm(i, i) = cm.cost(zero, basis_vector(i));
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const Vector eij = es.embed(Vector::Unit(p, i) + Vector::Unit(p, j));
      form.Dm(i, j) = form.Dm(j, i) =
          0.5 * (cm.cost(eij, zero) - form.Dm(i, i) - form.Dm(j, j));
      form.Fm(i, j) = form.Fm(j, i) =
          0.5 * (cm.cost(zero, eij) - form.Fm(i, i) - form.Fm(j, j));
    }
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      form.Em(i, j) =
          form.Dm(i, i) + form.Fm(j, j) - cm.cost(basis_vector(i), basis_vector(j));
    }
  }

  // Reconstruction check on random equilibrium pairs.
  CounterRng rng(0x51c0ffee, 7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector wx(p), wy(p);
    for (Eigen::Index k = 0; k < p; ++k) {
      wx(k) = rng.uniform(-1.0, 1.0);
      wy(k) = rng.uniform(-1.0, 1.0);
    }
    const double direct = cm.cost(es.embed(wx), es.embed(wy));
    const double rebuilt =
        wx.dot(form.Dm * wx) - wx.dot(form.Em * wy) + wy.dot(form.Fm * wy);
    worst = std::max(worst,
                     std::abs(direct - rebuilt) / (1.0 + std::abs(direct)));
  }
  if (worst > 1e-6) {
    throw NotQuadraticError(
        "cost is not endpoint-quadratic (reconstruction error " +
            std::to_string(worst) + ")",
        worst);
  }
  return form;
}

double translation_invariance_probe(const CostModel& cm,
                                    const EquilibriumSpace& es, int n_samples,
                                    std::uint64_t seed) {
  const Eigen::Index p = es.eq_dim();
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    CounterRng rng(seed, static_cast<std::uint64_t>(k));
    Vector wx(p), wy(p), wz(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      wx(i) = rng.uniform(-1.0, 1.0);
      wy(i) = rng.uniform(-1.0, 1.0);
      wz(i) = rng.uniform(-1.0, 1.0);
    }
    const Vector x = es.embed(wx);
    const Vector y = es.embed(wy);
    const Vector z = es.embed(wz);
    const double base = cm.cost(x, y);
    const double shifted = cm.cost(x + z, y + z);
    worst = std::max(worst, std::abs(shifted - base) / (1.0 + std::abs(base)));
  }
  return worst;
}

double convexity_certificate(const ReducedCost& rc) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rc.M);
  return eig.eigenvalues().minCoeff();
}

}  // namespace eqot
