#include "eqot/measures.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "eqot/rng.hpp"

namespace eqot {

namespace {

double unit_ball_volume(Eigen::Index p) {
  return std::pow(M_PI, 0.5 * p) / std::tgamma(0.5 * p + 1.0);
}

void check_weights(const Vector& w, const char* what) {
  if (w.size() < 1) throw Error(std::string(what) + ": empty weights");
  if (w.minCoeff() < 0.0) {
    throw Error(std::string(what) + ": negative weight");
  }
  if (std::abs(w.sum() - 1.0) > 1e-12) {
    throw Error(std::string(what) + ": weights must sum to 1");
  }
}

Eigen::Index cell_count(const std::vector<int>& resolution) {
  Eigen::Index n = 1;
  for (int r : resolution) {
    if (r < 1) throw Error("grid resolution entries must be >= 1");
    n *= r;
  }
  return n;
}

}  // namespace

bool Box::contains(const Vector& x) const {
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (x(i) < lo(i) || x(i) > hi(i)) return false;
  }
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (Eigen::Index i = 0; i < dim(); ++i) v *= hi(i) - lo(i);
  return v;
}

void Box::validate() const {
  if (lo.size() != hi.size() || lo.size() < 1) {
    throw Error("domain box: lo/hi dimension mismatch");
  }
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (!(lo(i) < hi(i))) throw Error("domain box: lo must be below hi");
  }
}

void MeasureSpec::validate() const {
  domain.validate();
  const Eigen::Index p = dim();
  switch (kind) {
    case MeasureKind::UniformDiskMixture:
    case MeasureKind::GaussianMixture: {
      if (components.empty()) throw Error("measure: no components");
      double total = 0.0;
      for (const auto& c : components) {
        if (c.center.size() != p) throw Error("measure: center dimension");
        if (c.weight < 0.0) throw Error("measure: negative component weight");
        total += c.weight;
        if (kind == MeasureKind::UniformDiskMixture) {
          if (!(c.radius > 0.0)) throw Error("measure: radius must be > 0");
        } else {
          if (c.covariance.rows() != p || c.covariance.cols() != p) {
            throw Error("measure: covariance dimension");
          }
          Eigen::LLT<Matrix> llt(c.covariance);
          if (llt.info() != Eigen::Success) {
            throw Error("measure: covariance must be positive definite");
          }
        }
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw Error("measure: component weights must sum to 1");
      }
      break;
    }
    case MeasureKind::GridDensity: {
      if (static_cast<Eigen::Index>(grid_resolution.size()) != p) {
        throw Error("measure: grid resolution dimension");
      }
      if (grid_values.size() != cell_count(grid_resolution)) {
        throw Error("measure: grid values size");
      }
      if (grid_values.minCoeff() < 0.0) {
        throw Error("measure: negative grid value");
      }
      if (std::abs(grid_values.sum() - 1.0) > 1e-12) {
        throw Error("measure: grid values must sum to 1");
      }
      break;
    }
    case MeasureKind::PointCloud: {
      if (points.rows() < 1 || points.cols() != p) {
        throw Error("measure: point cloud shape");
      }
      check_weights(weights, "measure");
      for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (!domain.contains(points.row(i).transpose())) {
          throw Error("measure: point outside the domain box");
        }
      }
      break;
    }
  }
}

double MeasureSpec::density(const Vector& x) const {
  const Eigen::Index p = dim();
  switch (kind) {
    case MeasureKind::UniformDiskMixture: {
      double v = 0.0;
      for (const auto& c : components) {
        if ((x - c.center).norm() <= c.radius) {
          v += c.weight / (unit_ball_volume(p) * std::pow(c.radius, p));
        }
      }
      return v;
    }
    case MeasureKind::GaussianMixture: {
      double v = 0.0;
      for (const auto& c : components) {
        Eigen::LLT<Matrix> llt(c.covariance);
        const Vector r = x - c.center;
        const double quad = r.dot(llt.solve(r));
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
          logdet += std::log(llt.matrixL()(i, i));
        }
        v += c.weight * std::exp(-0.5 * quad - logdet -
                                 0.5 * p * std::log(2.0 * M_PI));
      }
      return v;
    }
    case MeasureKind::GridDensity: {
      if (!domain.contains(x)) return 0.0;
      // Linear index with axis 0 fastest (same layout as DensityGrid).
      Eigen::Index idx = 0;
      double cellvol = 1.0;
      for (Eigen::Index a = p - 1; a >= 0; --a) {
        const int res = grid_resolution[static_cast<std::size_t>(a)];
        const double h = (domain.hi(a) - domain.lo(a)) / res;
        cellvol *= h;
        int i = static_cast<int>((x(a) - domain.lo(a)) / h);
        i = std::min(std::max(i, 0), res - 1);
        idx = idx * res + i;
      }
      return grid_values(idx) / cellvol;
    }
    case MeasureKind::PointCloud:
      return 0.0;
  }
  return 0.0;
}

void DiscreteMeasure::validate() const {
  domain.validate();
  if (points.rows() < 1 || points.cols() != domain.dim()) {
    throw Error("discrete measure: point shape");
  }
  if (weights.size() != points.rows()) {
    throw Error("discrete measure: weights size");
  }
  check_weights(weights, "discrete measure");
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (!domain.contains(points.row(i).transpose())) {
      throw Error("discrete measure: point outside the domain box");
    }
  }
}

bool DiscreteMeasure::uniform_weights(double tol) const {
  const double w0 = 1.0 / static_cast<double>(size());
  return (weights.array() - w0).abs().maxCoeff() <= tol;
}

double DiscreteMeasure::diameter() const {
  // Bounding-box diagonal of the cloud.
  const Vector lo = points.colwise().minCoeff();
  const Vector hi = points.colwise().maxCoeff();
  return (hi - lo).norm();
}

namespace {

Vector sample_point(const MeasureSpec& spec, std::uint64_t seed,
                    std::uint64_t index) {
  CounterRng rng(seed, index);
  const Eigen::Index p = spec.dim();
  Vector x(p);
  switch (spec.kind) {
    case MeasureKind::UniformDiskMixture:
    case MeasureKind::GaussianMixture: {
      // Component by CDF inversion.
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t pick = spec.components.size() - 1;
      for (std::size_t k = 0; k < spec.components.size(); ++k) {
        acc += spec.components[k].weight;
        if (u < acc) {
          pick = k;
          break;
        }
      }
      const auto& c = spec.components[pick];
      if (spec.kind == MeasureKind::UniformDiskMixture) {
        // Rejection from the bounding cube.
        for (int attempt = 0; attempt < 4096; ++attempt) {
          for (Eigen::Index i = 0; i < p; ++i) x(i) = rng.uniform(-1.0, 1.0);
          if (x.norm() <= 1.0) break;
        }
        x = c.center + c.radius * x;
      } else {
        Eigen::LLT<Matrix> llt(c.covariance);
        Vector z(p);
        for (Eigen::Index i = 0; i < p; ++i) z(i) = rng.normal();
        x = c.center + Matrix(llt.matrixL()) * z;
      }
      break;
    }
    case MeasureKind::GridDensity: {
      const double u = rng.uniform();
      double acc = 0.0;
      Eigen::Index cell = spec.grid_values.size() - 1;
      for (Eigen::Index k = 0; k < spec.grid_values.size(); ++k) {
        acc += spec.grid_values(k);
        if (u < acc) {
          cell = k;
          break;
        }
      }
      // Unravel the axis-0-fastest index, then place uniformly in the cell.
      Eigen::Index rem = cell;
      std::vector<int> coord(static_cast<std::size_t>(p));
      for (Eigen::Index a = 0; a < p; ++a) {
        const int res = spec.grid_resolution[static_cast<std::size_t>(a)];
        coord[static_cast<std::size_t>(a)] = static_cast<int>(rem % res);
        rem /= res;
      }
      for (Eigen::Index a = 0; a < p; ++a) {
        const int res = spec.grid_resolution[static_cast<std::size_t>(a)];
        const double h = (spec.domain.hi(a) - spec.domain.lo(a)) / res;
        x(a) = spec.domain.lo(a) +
               h * (coord[static_cast<std::size_t>(a)] + rng.uniform());
      }
      break;
    }
    case MeasureKind::PointCloud:
      throw Error("sample_point: point clouds are not sampled");
  }
  return x;
}

}  // namespace

DiscreteMeasure discretize(const MeasureSpec& spec, Eigen::Index n,
                           SampleMode mode, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw Error("discretize: n must be >= 1");
  const Eigen::Index p = spec.dim();

  DiscreteMeasure dm;
  dm.domain = spec.domain;

  if (spec.kind == MeasureKind::PointCloud) {
    dm.points = spec.points;
    dm.weights = spec.weights;
    return dm;
  }

  if (mode == SampleMode::MonteCarlo) {
    dm.points.resize(n, p);
    dm.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector x = sample_point(spec, seed, static_cast<std::uint64_t>(i));
      // Resample draws that leave the domain box (stream offset keeps the
      // replacement deterministic); clamp as a last resort.
      for (std::uint64_t retry = 1; retry <= 64 && !spec.domain.contains(x);
           ++retry) {
        x = sample_point(spec, seed,
                         static_cast<std::uint64_t>(i) + retry * 0x10000000ULL);
      }
      for (Eigen::Index a = 0; a < p; ++a) {
        x(a) = std::min(std::max(x(a), spec.domain.lo(a)), spec.domain.hi(a));
      }
      dm.points.row(i) = x.transpose();
    }
    return dm;
  }

  // Grid mode: cell centers weighted by the density mass they overlap,
  // estimated by supersampling each cell.
  const int per_axis = static_cast<int>(
      std::ceil(std::pow(static_cast<double>(n), 1.0 / static_cast<double>(p))));
  const int sub = 4;
  std::vector<int> res(static_cast<std::size_t>(p), per_axis);
  const Eigen::Index cells = cell_count(res);
  std::vector<Vector> centers;
  std::vector<double> masses;
  centers.reserve(static_cast<std::size_t>(cells));
  for (Eigen::Index cell = 0; cell < cells; ++cell) {
    Eigen::Index rem = cell;
    Vector center(p);
    std::vector<int> coord(static_cast<std::size_t>(p));
    for (Eigen::Index a = 0; a < p; ++a) {
      coord[static_cast<std::size_t>(a)] = static_cast<int>(rem % per_axis);
      rem /= per_axis;
    }
    double cellvol = 1.0;
    for (Eigen::Index a = 0; a < p; ++a) {
      const double h = (spec.domain.hi(a) - spec.domain.lo(a)) / per_axis;
      center(a) = spec.domain.lo(a) +
                  h * (coord[static_cast<std::size_t>(a)] + 0.5);
      cellvol *= h;
    }
    // Tensor supersample at sub^p points.
    Eigen::Index nsub = 1;
    for (Eigen::Index a = 0; a < p; ++a) nsub *= sub;
    double mean = 0.0;
    for (Eigen::Index k = 0; k < nsub; ++k) {
      Eigen::Index krem = k;
      Vector xk(p);
      for (Eigen::Index a = p - 1; a >= 0; --a) {
        const int s = static_cast<int>(krem % sub);
        krem /= sub;
        const double h = (spec.domain.hi(a) - spec.domain.lo(a)) / per_axis;
        xk(a) = spec.domain.lo(a) +
                h * (coord[static_cast<std::size_t>(a)] +
                     (s + 0.5) / static_cast<double>(sub));
      }
      mean += spec.density(xk);
    }
    mean /= static_cast<double>(nsub);
    if (mean > 0.0) {
      centers.push_back(center);
      masses.push_back(mean * cellvol);
    }
  }
  if (centers.empty()) {
    throw Error("discretize: support does not intersect the domain box");
  }
  dm.points.resize(static_cast<Eigen::Index>(centers.size()), p);
  dm.weights.resize(static_cast<Eigen::Index>(centers.size()));
  double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    dm.points.row(static_cast<Eigen::Index>(i)) = centers[i].transpose();
    dm.weights(static_cast<Eigen::Index>(i)) = masses[i] / total;
  }
  // Renormalize exactly.
  dm.weights /= dm.weights.sum();
  return dm;
}

Matrix embed_measure(const DiscreteMeasure& dm, const EquilibriumSpace& es) {
  dm.validate();
  if (dm.dim() != es.eq_dim()) {
    throw Error("embed_measure: dimension mismatch");
  }
  return es.embed_rows(dm.points);
}

namespace {

/// One separable smoothing pass along `axis`. Each source cell scatters its
/// value through a Gaussian kernel renormalized over in-range targets, so
/// total mass is preserved.
void smooth_axis(Vector& values, int nx, int ny, int axis, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] =
        std::exp(-0.5 * (k / sigma) * (k / sigma));
  }
  Vector out = Vector::Zero(values.size());
  const int n_axis = axis == 0 ? nx : ny;
  const int n_other = axis == 0 ? ny : nx;
  for (int o = 0; o < n_other; ++o) {
    for (int i = 0; i < n_axis; ++i) {
      const Eigen::Index src = axis == 0 ? o * nx + i : i * nx + o;
      const double v = values(src);
      if (v == 0.0) continue;
      double norm = 0.0;
      const int k0 = std::max(-radius, -i);
      const int k1 = std::min(radius, n_axis - 1 - i);
      for (int k = k0; k <= k1; ++k) {
        norm += kernel[static_cast<std::size_t>(k + radius)];
      }
      for (int k = k0; k <= k1; ++k) {
        const Eigen::Index dst =
            axis == 0 ? o * nx + (i + k) : (i + k) * nx + o;
        out(dst) += v * kernel[static_cast<std::size_t>(k + radius)] / norm;
      }
    }
  }
  values = out;
}

}  // namespace

void DensityGrid::validate(double tol) const {
  if (values.minCoeff() < 0.0) throw Error("density grid: negative cell");
  if (std::abs(values.sum() + clipped_mass - 1.0) > tol) {
    throw Error("density grid: mass not conserved");
  }
}

DensityGrid rasterize(const DiscreteMeasure& dm,
                      const std::vector<int>& resolution, double bandwidth) {
  const Eigen::Index p = dm.dim();
  if (p < 1 || p > 2) throw Error("rasterize: only p in {1, 2} is supported");
  if (static_cast<Eigen::Index>(resolution.size()) != p) {
    throw Error("rasterize: resolution dimension mismatch");
  }
  DensityGrid grid;
  grid.resolution = resolution;
  grid.domain = dm.domain;
  const int nx = resolution[0];
  const int ny = p == 2 ? resolution[1] : 1;
  grid.values = Vector::Zero(static_cast<Eigen::Index>(nx) * ny);

  Vector h(p);
  for (Eigen::Index a = 0; a < p; ++a) {
    h(a) = (dm.domain.hi(a) - dm.domain.lo(a)) / resolution[static_cast<std::size_t>(a)];
  }

  for (Eigen::Index i = 0; i < dm.size(); ++i) {
    const Vector x = dm.points.row(i).transpose();
    if (!dm.domain.contains(x)) {
      grid.clipped_mass += dm.weights(i);
      continue;
    }
    // Bilinear split onto the cell-center lattice; shares that would fall
    // outside fold onto the edge cell.
    int idx0[2] = {0, 0};
    double frac[2] = {0.0, 0.0};
    for (Eigen::Index a = 0; a < p; ++a) {
      const double u = (x(a) - dm.domain.lo(a)) / h(a) - 0.5;
      double base = std::floor(u);
      double f = u - base;
      int b = static_cast<int>(base);
      const int n_axis = resolution[static_cast<std::size_t>(a)];
      if (b < 0) {
        b = 0;
        f = 0.0;
      } else if (b >= n_axis - 1) {
        b = n_axis - 1;
        f = 0.0;
      }
      idx0[a] = b;
      frac[a] = f;
    }
    const double w = dm.weights(i);
    if (p == 1) {
      grid.values(idx0[0]) += w * (1.0 - frac[0]);
      if (frac[0] > 0.0) grid.values(idx0[0] + 1) += w * frac[0];
    } else {
      for (int dx = 0; dx <= 1; ++dx) {
        const double wx = dx == 0 ? 1.0 - frac[0] : frac[0];
        if (wx == 0.0) continue;
        for (int dy = 0; dy <= 1; ++dy) {
          const double wy = dy == 0 ? 1.0 - frac[1] : frac[1];
          if (wy == 0.0) continue;
          grid.values((idx0[1] + dy) * nx + (idx0[0] + dx)) += w * wx * wy;
        }
      }
    }
  }

  if (bandwidth > 0.0) {
    smooth_axis(grid.values, nx, ny, 0, bandwidth / h(0));
    if (p == 2) smooth_axis(grid.values, nx, ny, 1, bandwidth / h(1));
  }
  return grid;
}

}  // namespace eqot
