#include "eqot/measures.hpp"

#include <cmath>

#include <doctest.h>

using namespace eqot;

namespace {

Box unit_box(Eigen::Index p) {
  Box box;
  box.lo = Vector::Zero(p);
  box.hi = Vector::Ones(p);
  return box;
}

/// The two-disk initial measure from the planar experiment.
MeasureSpec two_disks_mu() {
  MeasureSpec spec;
  spec.kind = MeasureKind::UniformDiskMixture;
  spec.domain = unit_box(2);
  MixtureComponent a, b;
  a.center = Vector(2);
  a.center << 0.25, 0.75;
  a.radius = 0.125;
  a.weight = 0.5;
  b.center = Vector(2);
  b.center << 0.75, 0.25;
  b.radius = 0.125;
  b.weight = 0.5;
  spec.components = {a, b};
  return spec;
}

MeasureSpec single_disk(double cx, double cy, double r) {
  MeasureSpec spec;
  spec.kind = MeasureKind::UniformDiskMixture;
  spec.domain = unit_box(2);
  MixtureComponent c;
  c.center = Vector(2);
  c.center << cx, cy;
  c.radius = r;
  c.weight = 1.0;
  spec.components = {c};
  return spec;
}

/// Reference cell masses of a spec density on an nx x ny grid by dense
/// supersampling.
Vector reference_cell_masses(const MeasureSpec& spec, int nx, int ny,
                             int sub = 16) {
  Vector masses = Vector::Zero(static_cast<Eigen::Index>(nx) * ny);
  const double hx = (spec.domain.hi(0) - spec.domain.lo(0)) / nx;
  const double hy = (spec.domain.hi(1) - spec.domain.lo(1)) / ny;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (int sy = 0; sy < sub; ++sy) {
        for (int sx = 0; sx < sub; ++sx) {
          Vector x(2);
          x << spec.domain.lo(0) + hx * (ix + (sx + 0.5) / sub),
              spec.domain.lo(1) + hy * (iy + (sy + 0.5) / sub);
          acc += spec.density(x);
        }
      }
      masses(static_cast<Eigen::Index>(iy) * nx + ix) =
          acc / (sub * sub) * hx * hy;
    }
  }
  return masses;
}

}  // namespace

TEST_CASE("monte-carlo disk sampling concentrates at the center") {
  const MeasureSpec spec = single_disk(0.5, 0.5, 0.125);
  const Eigen::Index n = 4096;
  const DiscreteMeasure dm = discretize(spec, n, SampleMode::MonteCarlo, 3);
  dm.validate();
  CHECK(dm.size() == n);
  CHECK(dm.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  const Vector centroid = dm.points.colwise().mean();
  const double sigma = 0.125 / 2.0;
  const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(centroid(0) - 0.5) < bound);
  CHECK(std::abs(centroid(1) - 0.5) < bound);
  // Every sample lies inside the disk.
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector x = dm.points.row(i).transpose();
    x(0) -= 0.5;
    x(1) -= 0.5;
    CHECK(x.norm() <= 0.125 + 1e-12);
  }
}

TEST_CASE("two-disk mixture splits mass evenly at n = 2048") {
  const DiscreteMeasure dm =
      discretize(two_disks_mu(), 2048, SampleMode::MonteCarlo, 7);
  double first_disk = 0.0;
  for (Eigen::Index i = 0; i < dm.size(); ++i) {
    Vector c = dm.points.row(i).transpose();
    c(0) -= 0.25;
    c(1) -= 0.75;
    if (c.norm() <= 0.125 + 1e-12) first_disk += dm.weights(i);
  }
  CHECK(std::abs(first_disk - 0.5) < 0.03);
}

TEST_CASE("discretization is deterministic in the seed") {
  const MeasureSpec spec = two_disks_mu();
  const DiscreteMeasure a = discretize(spec, 512, SampleMode::MonteCarlo, 42);
  const DiscreteMeasure b = discretize(spec, 512, SampleMode::MonteCarlo, 42);
  CHECK((a.points - b.points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() == 0.0);
  const DiscreteMeasure c = discretize(spec, 512, SampleMode::MonteCarlo, 43);
  CHECK((a.points - c.points).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("point clouds pass through discretize unchanged") {
  MeasureSpec spec;
  spec.kind = MeasureKind::PointCloud;
  spec.domain = unit_box(1);
  spec.points = Matrix{{0.1}, {0.4}, {0.9}};
  spec.weights = Vector(3);
  spec.weights << 0.2, 0.3, 0.5;
  const DiscreteMeasure dm = discretize(spec, 99, SampleMode::Grid, 0);
  CHECK((dm.points - spec.points).norm() == 0.0);
  CHECK((dm.weights - spec.weights).norm() == 0.0);
}

TEST_CASE("grid discretization covers the support and normalizes") {
  const MeasureSpec spec = single_disk(0.5, 0.5, 0.2);
  const DiscreteMeasure dm = discretize(spec, 1024, SampleMode::Grid, 0);
  dm.validate();
  CHECK(dm.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  // Cell centers sit near the disk (within a cell diagonal of it).
  const double h = 1.0 / std::ceil(std::sqrt(1024.0));
  for (Eigen::Index i = 0; i < dm.size(); ++i) {
    Vector x = dm.points.row(i).transpose();
    x(0) -= 0.5;
    x(1) -= 0.5;
    CHECK(x.norm() <= 0.2 + h);
  }
}

TEST_CASE("grid discretization fails off-support") {
  // Disk entirely outside the domain box.
  MeasureSpec spec = single_disk(0.5, 0.5, 0.1);
  spec.components[0].center << 5.0, 5.0;
  CHECK_THROWS_AS((void)discretize(spec, 64, SampleMode::Grid, 0), Error);
}

TEST_CASE("gaussian mixture sampling respects the covariance") {
  MeasureSpec spec;
  spec.kind = MeasureKind::GaussianMixture;
  Box box;
  box.lo = Vector::Constant(2, -6.0);
  box.hi = Vector::Constant(2, 6.0);
  spec.domain = box;
  MixtureComponent c;
  c.center = Vector::Zero(2);
  c.covariance = Matrix{{0.04, 0.0}, {0.0, 0.09}};
  c.weight = 1.0;
  spec.components = {c};
  const DiscreteMeasure dm = discretize(spec, 8192, SampleMode::MonteCarlo, 11);
  const Vector mean = dm.points.colwise().mean();
  CHECK(std::abs(mean(0)) < 0.02);
  CHECK(std::abs(mean(1)) < 0.02);
  const double var0 =
      (dm.points.col(0).array() - mean(0)).square().mean();
  const double var1 =
      (dm.points.col(1).array() - mean(1)).square().mean();
  CHECK(var0 == doctest::Approx(0.04).epsilon(0.1));
  CHECK(var1 == doctest::Approx(0.09).epsilon(0.1));
}

TEST_CASE("embedding places clouds on the equilibrium set") {
  const Matrix A =
      Matrix{{0, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 0, 0}};
  const Matrix B = Matrix{{0, 0}, {1, 0}, {0, 0}, {0, 1}};
  const LTISystem sys(A, B);
  const EquilibriumSpace es = equilibrium_space(sys);

  DiscreteMeasure dm;
  dm.domain = unit_box(2);
  dm.points = Matrix{{0.3, 0.8}, {0.0, 0.0}};
  dm.weights = Vector::Constant(2, 0.5);
  const Matrix states = embed_measure(dm, es);
  CHECK(states(0, 0) == 0.3);
  CHECK(states(0, 1) == 0.0);
  CHECK(states(0, 2) == 0.8);
  CHECK(states(0, 3) == 0.0);
  CHECK(states.row(1).norm() == 0.0);
  CHECK((A * states.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rasterize deposits a centered point into one cell") {
  DiscreteMeasure dm;
  dm.domain = unit_box(2);
  dm.points = Matrix{{0.375, 0.625}};  // center of cell (1, 2) on a 4x4 grid
  dm.weights = Vector::Ones(1);
  const DensityGrid grid = rasterize(dm, {4, 4}, 0.0);
  CHECK(grid.values.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(grid.values(2 * 4 + 1) == 1.0);
  CHECK(grid.clipped_mass == 0.0);
  grid.validate();
}

TEST_CASE("rasterize conserves mass with smoothing and reports clipping") {
  const DiscreteMeasure dm =
      discretize(two_disks_mu(), 2048, SampleMode::MonteCarlo, 9);
  const DensityGrid grid = rasterize(dm, {256, 256}, 0.01);
  CHECK(std::abs(grid.values.sum() - 1.0) < 1e-9);
  CHECK(grid.values.minCoeff() >= 0.0);
  grid.validate();

  // A point outside the box is clipped and reported.
  DiscreteMeasure outlier;
  outlier.domain = unit_box(1);
  outlier.points = Matrix{{0.5}, {2.0}};
  outlier.weights = Vector::Constant(2, 0.5);
  const DensityGrid g1 = rasterize(outlier, {8}, 0.0);
  CHECK(g1.clipped_mass == doctest::Approx(0.5));
  CHECK(g1.values.sum() == doctest::Approx(0.5));
  g1.validate();
}

TEST_CASE("rasterized monte-carlo clouds approach the density") {
  const MeasureSpec spec = two_disks_mu();
  const Vector ref = reference_cell_masses(spec, 64, 64);
  const auto l1_error = [&](Eigen::Index n) {
    const DiscreteMeasure dm = discretize(spec, n, SampleMode::MonteCarlo, 13);
    const DensityGrid grid = rasterize(dm, {64, 64}, 0.0);
    return (grid.values - ref).cwiseAbs().mean();
  };
  const double err_small = l1_error(4096);
  const double err_large = l1_error(16384);
  // Monte-Carlo rate: quadrupling n should halve the L1 error (within 20%).
  const double ratio = err_large / err_small;
  CHECK(ratio > 0.4);
  CHECK(ratio < 0.6);
}

TEST_CASE("measure validation errors") {
  MeasureSpec spec = single_disk(0.5, 0.5, 0.1);
  spec.components[0].weight = -1.0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = single_disk(0.5, 0.5, 0.0);
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = single_disk(0.5, 0.5, 0.1);
  spec.domain.hi = spec.domain.lo;
  CHECK_THROWS_AS(spec.validate(), Error);

  DiscreteMeasure dm;
  dm.domain = unit_box(1);
  dm.points = Matrix{{0.5}};
  dm.weights = Vector::Constant(1, 0.7);
  CHECK_THROWS_AS(dm.validate(), Error);
}
