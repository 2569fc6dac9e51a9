#pragma once

#include <cstdint>
#include <vector>

#include "eqot/linsys.hpp"

namespace eqot {

enum class MeasureKind {
  UniformDiskMixture,
  GaussianMixture,
  GridDensity,
  PointCloud
};

enum class SampleMode { Grid, MonteCarlo };

/// Axis-aligned box in reduced coordinates.
struct Box {
  Vector lo, hi;

  Eigen::Index dim() const { return lo.size(); }
  bool contains(const Vector& x) const;
  double volume() const;
  void validate() const;
};

/// One mixture component. `radius` is used by disk mixtures, `covariance` by
/// Gaussian mixtures.
struct MixtureComponent {
  Vector center;
  double radius = 0.0;
  Matrix covariance;
  double weight = 1.0;
};

/// Declarative description of an equilibrium measure in reduced coordinates.
struct MeasureSpec {
  MeasureKind kind = MeasureKind::UniformDiskMixture;
  std::vector<MixtureComponent> components;
  Box domain;
  // GridDensity only.
  std::vector<int> grid_resolution;
  Vector grid_values;
  // PointCloud only.
  Matrix points;
  Vector weights;

  Eigen::Index dim() const { return domain.dim(); }
  void validate() const;

  /// Density value at x (GridDensity: piecewise constant; PointCloud: 0).
  double density(const Vector& x) const;
};

/// Weighted point cloud in reduced coordinates.
struct DiscreteMeasure {
  Matrix points;   // n x p
  Vector weights;  // n, nonnegative, sums to 1
  Box domain;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  void validate() const;
  bool uniform_weights(double tol = 1e-12) const;
  double diameter() const;
};

/// Nonnegative cell values over the domain box (p = 1 or 2), cell-centered.
/// Linear index has axis 0 fastest: iy * nx + ix for p = 2.
struct DensityGrid {
  std::vector<int> resolution;
  Vector values;
  Box domain;
  double clipped_mass = 0.0;

  double mass() const { return values.sum(); }
  void validate(double tol = 1e-9) const;
};

/// Discretizes a measure spec to n points. Grid mode places cell centers
/// weighted by overlapped density; Monte Carlo draws n i.i.d. samples with
/// equal weights, deterministic in the seed. PointCloud specs are returned
/// unchanged.
DiscreteMeasure discretize(const MeasureSpec& spec, Eigen::Index n,
                           SampleMode mode, std::uint64_t seed);

/// Embeds the cloud into state space; rows satisfy A x ≈ 0.
Matrix embed_measure(const DiscreteMeasure& dm, const EquilibriumSpace& es);

/// Mass-preserving bilinear deposition onto a cell-centered grid, with
/// optional Gaussian smoothing of the given bandwidth (in domain units).
/// Points outside the domain box are dropped into clipped_mass.
DensityGrid rasterize(const DiscreteMeasure& dm,
                      const std::vector<int>& resolution, double bandwidth);

}  // namespace eqot
