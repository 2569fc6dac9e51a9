#include "eqot/costs.hpp"

#include <cmath>

#include <doctest.h>

#include "eqot/rng.hpp"
#include "oracles.hpp"

using namespace eqot;

namespace {

const Matrix kDi1A = Matrix{{0, 1}, {0, 0}};
const Matrix kDi1B = Matrix{{0}, {1}};
const Matrix kDi2A =
    Matrix{{0, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 0, 0}};
const Matrix kDi2B = Matrix{{0, 0}, {1, 0}, {0, 0}, {0, 1}};

CostModel di1_min_energy() {
  return CostModel(LTISystem(kDi1A, kDi1B), RunningCostSpec::min_energy(1));
}

CostModel scalar_lq() {
  Matrix A = Matrix::Zero(1, 1);
  Matrix B = Matrix::Ones(1, 1);
  return CostModel(LTISystem(A, B),
                   RunningCostSpec::lq(Matrix::Identity(1, 1),
                                       Matrix::Identity(1, 1)));
}

double scalar_lq_closed_form(double x, double y) {
  return ((x * x + y * y) * std::cosh(1.0) - 2.0 * x * y) / std::sinh(1.0);
}

}  // namespace

TEST_CASE("minimum-energy cost closed forms") {
  const CostModel cm = di1_min_energy();
  Vector x(2), y(2);
  x << 0.0, 0.0;
  y << 1.0, 0.0;
  CHECK(cm.min_energy_cost(x, y) == doctest::Approx(12.0).epsilon(1e-10));

  // Zero displacement on E.
  Vector z(2);
  z << 4.5, 0.0;
  CHECK(std::abs(cm.min_energy_cost(z, z)) < 1e-10 * z.squaredNorm());

  // Scalar single integrator: c(x, y) = (y - x)^2.
  const CostModel si(LTISystem(Matrix::Zero(1, 1), Matrix::Ones(1, 1)),
                     RunningCostSpec::min_energy(1));
  Vector a(1), b(1);
  a << 0.3;
  b << -1.2;
  CHECK(si.min_energy_cost(a, b) == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("reduced quadratic forms") {
  SUBCASE("double integrator") {
    const CostModel cm = di1_min_energy();
    const EquilibriumSpace es = equilibrium_space(cm.system());
    const ReducedCost rc = reduced_quadratic(cm, es);
    REQUIRE(rc.M.rows() == 1);
    CHECK(rc.M(0, 0) == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(rc.provenance == ReducedCost::Provenance::GramianRestriction);
  }
  SUBCASE("planar double integrator gives 12 I") {
    const CostModel cm(LTISystem(kDi2A, kDi2B), RunningCostSpec::min_energy(2));
    const EquilibriumSpace es = equilibrium_space(cm.system());
    const ReducedCost rc = reduced_quadratic(cm, es);
    REQUIRE(rc.M.rows() == 2);
    CHECK((rc.M - 12.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("single integrator gives the identity") {
    const CostModel cm(LTISystem(Matrix::Zero(3, 3), Matrix::Identity(3, 3)),
                       RunningCostSpec::min_energy(3));
    const EquilibriumSpace es = equilibrium_space(cm.system());
    const ReducedCost rc = reduced_quadratic(cm, es);
    CHECK((rc.M - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("reduced cost matches the full cost on E") {
  const CostModel cm(LTISystem(kDi2A, kDi2B), RunningCostSpec::min_energy(2));
  const EquilibriumSpace es = equilibrium_space(cm.system());
  const ReducedCost rc = reduced_quadratic(cm, es);
  CounterRng rng(77, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector wx(2), wy(2);
    for (int i = 0; i < 2; ++i) {
      wx(i) = rng.uniform(-2.0, 2.0);
      wy(i) = rng.uniform(-2.0, 2.0);
    }
    const double direct = cm.cost(es.embed(wx), es.embed(wy));
    const double reduced = rc.evaluate(wx - wy);
    CHECK(std::abs(direct - reduced) <= 1e-8 * (1.0 + std::abs(direct)));
    // Evenness of the displacement cost.
    CHECK(rc.evaluate(wy - wx) == doctest::Approx(reduced).epsilon(1e-12));
  }
}

TEST_CASE("midpoint convexity is exact for the reduced quadratic") {
  const CostModel cm(LTISystem(kDi2A, kDi2B), RunningCostSpec::min_energy(2));
  const EquilibriumSpace es = equilibrium_space(cm.system());
  const ReducedCost rc = reduced_quadratic(cm, es);
  CounterRng rng(78, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector w0(2), w1(2);
    for (int i = 0; i < 2; ++i) {
      w0(i) = rng.uniform(-2.0, 2.0);
      w1(i) = rng.uniform(-2.0, 2.0);
    }
    const Vector mid = 0.5 * (w0 + w1);
    const Vector diff = w0 - w1;
    const double lhs = rc.evaluate(mid);
    const double rhs = 0.5 * (rc.evaluate(w0) + rc.evaluate(w1)) -
                       0.25 * diff.dot(rc.M * diff);
    CHECK(lhs <= rhs + 1e-10);
    CHECK(lhs >= rhs - 1e-10);  // equality for quadratics
  }
}

TEST_CASE("LQ cost: trivial and closed-form cases") {
  const CostModel lq = scalar_lq();
  Vector zero = Vector::Zero(1);
  CHECK(std::abs(lq.lq_cost(zero, zero)) < 1e-12);

  CounterRng rng(79, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(1), y(1);
    x << rng.uniform(-2.0, 2.0);
    y << rng.uniform(-2.0, 2.0);
    const double expected = scalar_lq_closed_form(x(0), y(0));
    CHECK(lq.lq_cost(x, y) ==
          doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("LQ cost with Q = 0 equals the minimum-energy cost") {
  const CostModel me(LTISystem(kDi1A, kDi1B), RunningCostSpec::min_energy(1));
  const CostModel lq(LTISystem(kDi1A, kDi1B),
                     RunningCostSpec::lq(Matrix::Zero(2, 2),
                                         Matrix::Identity(1, 1)));
  CounterRng rng(80, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(2), y(2);
    for (int i = 0; i < 2; ++i) {
      x(i) = rng.uniform(-1.5, 1.5);
      y(i) = rng.uniform(-1.5, 1.5);
    }
    const double a = me.min_energy_cost(x, y);
    const double b = lq.lq_cost(x, y);
    CHECK(std::abs(a - b) <= 1e-8 * (1.0 + std::abs(a)));
  }
}

TEST_CASE("LQ cost agrees with direct transcription") {
  // Scalar oscillator-type cost.
  {
    const CostModel lq = scalar_lq();
    Vector x(1), y(1);
    x << 0.7;
    y << -0.4;
    const double ours = lq.lq_cost(x, y);
    const double ref = eqot_test::transcription_lq(
        Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Identity(1, 1),
        Matrix::Identity(1, 1), x, y, 400);
    CHECK(std::abs(ours - ref) < 5e-3 * (1.0 + std::abs(ours)));
  }
  // Double integrator with a velocity penalty (conforming Q).
  {
    Matrix Q = Matrix::Zero(2, 2);
    Q(1, 1) = 2.0;
    Matrix Ru = Matrix::Identity(1, 1);
    const CostModel lq(LTISystem(kDi1A, kDi1B), RunningCostSpec::lq(Q, Ru));
    Vector x(2), y(2);
    x << 0.0, 0.0;
    y << 1.0, 0.0;
    const double ours = lq.lq_cost(x, y);
    const double ref =
        eqot_test::transcription_lq(kDi1A, kDi1B, Q, Ru, x, y, 400);
    CHECK(std::abs(ours - ref) < 5e-3 * (1.0 + std::abs(ours)));
  }
}

TEST_CASE("quadratic form extraction") {
  SUBCASE("double integrator") {
    const CostModel cm = di1_min_energy();
    const EquilibriumSpace es = equilibrium_space(cm.system());
    const QuadraticCostForm form = quadratic_form_extract(cm, es);
    CHECK(form.Dm(0, 0) == doctest::Approx(12.0).epsilon(1e-8));
    CHECK(form.Em(0, 0) == doctest::Approx(24.0).epsilon(1e-8));
    CHECK(form.Fm(0, 0) == doctest::Approx(12.0).epsilon(1e-8));
  }
  SUBCASE("single integrator") {
    const CostModel cm(LTISystem(Matrix::Zero(2, 2), Matrix::Identity(2, 2)),
                       RunningCostSpec::min_energy(2));
    const EquilibriumSpace es = equilibrium_space(cm.system());
    const QuadraticCostForm form = quadratic_form_extract(cm, es);
    CHECK((form.Dm - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((form.Em - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-8);
    CHECK((form.Fm - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("scalar LQ") {
    const CostModel lq = scalar_lq();
    const EquilibriumSpace es = equilibrium_space(lq.system(), 1e-9);
    const QuadraticCostForm form = quadratic_form_extract(lq, es);
    const double c1 = std::cosh(1.0) / std::sinh(1.0);
    CHECK(form.Dm(0, 0) == doctest::Approx(c1).epsilon(1e-8));
    CHECK(form.Fm(0, 0) == doctest::Approx(c1).epsilon(1e-8));
    CHECK(form.Em(0, 0) ==
          doctest::Approx(2.0 / std::sinh(1.0)).epsilon(1e-8));
  }
}

TEST_CASE("translation invariance probe") {
  SUBCASE("conforming min-energy model") {
    const CostModel cm = di1_min_energy();
    const EquilibriumSpace es = equilibrium_space(cm.system());
    CHECK(translation_invariance_probe(cm, es, 32, 5) < 1e-10);
    // z = 0 shift changes nothing at all.
    Vector x = es.embed(Vector::Constant(1, 0.4));
    Vector y = es.embed(Vector::Constant(1, -0.9));
    CHECK(cm.cost(x, y) == cm.cost(x + es.embed(Vector::Zero(1)),
                                   y + es.embed(Vector::Zero(1))));
  }
  SUBCASE("violating Q is detected") {
    // Q = I on the double integrator breaks Q P_perp = Q.
    const CostModel lq(LTISystem(kDi1A, kDi1B),
                       RunningCostSpec::lq(Matrix::Identity(2, 2),
                                           Matrix::Identity(1, 1)));
    const EquilibriumSpace es = equilibrium_space(lq.system());
    CHECK(q_structure_residual(lq.spec(), es) > 0.5);
    CHECK(translation_invariance_probe(lq, es, 32, 5) > 1e-3);
  }
  SUBCASE("conforming Q passes the structure check") {
    Matrix Q = Matrix::Zero(2, 2);
    Q(1, 1) = 3.0;
    const RunningCostSpec spec =
        RunningCostSpec::lq(Q, Matrix::Identity(1, 1));
    const EquilibriumSpace es =
        equilibrium_space(LTISystem(kDi1A, kDi1B));
    CHECK(q_structure_residual(spec, es) < 1e-10);
  }
}

TEST_CASE("convexity certificate") {
  ReducedCost rc;
  rc.M = Matrix::Constant(1, 1, 12.0);
  CHECK(convexity_certificate(rc) == doctest::Approx(12.0));
  rc.M = 12.0 * Matrix::Identity(2, 2);
  CHECK(convexity_certificate(rc) == doctest::Approx(12.0));
  rc.M = Matrix{{2.0, 1.0}, {1.0, 2.0}};
  CHECK(convexity_certificate(rc) == doctest::Approx(1.0));
}

TEST_CASE("spec validation errors") {
  // Ru must be positive definite.
  CHECK_THROWS_AS(CostModel(LTISystem(kDi1A, kDi1B),
                            RunningCostSpec::lq(Matrix::Zero(2, 2),
                                                Matrix::Zero(1, 1))),
                  Error);
  // Q must be symmetric PSD.
  Matrix asym{{0.0, 1.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(CostModel(LTISystem(kDi1A, kDi1B),
                            RunningCostSpec::lq(asym, Matrix::Identity(1, 1))),
                  Error);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(0, 0) = -1.0;
  CHECK_THROWS_AS(
      CostModel(LTISystem(kDi1A, kDi1B),
                RunningCostSpec::lq(indefinite, Matrix::Identity(1, 1))),
      Error);
  // Dimension mismatch in cost evaluation.
  const CostModel cm = di1_min_energy();
  CHECK_THROWS_AS((void)cm.min_energy_cost(Vector::Zero(3), Vector::Zero(2)),
                  Error);
}

TEST_CASE("metadata constants are stored but unused") {
  RunningCostSpec spec = RunningCostSpec::min_energy(1);
  spec.coercivity_theta = 1.0;
  spec.strong_convexity_lambda = 2.0;
  const CostModel cm(LTISystem(kDi1A, kDi1B), spec);
  CHECK(cm.spec().coercivity_theta.value() == 1.0);
  CHECK(cm.spec().strong_convexity_lambda.value() == 2.0);
}
