#include "eqot/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace eqot {

std::string format_double(double v) {
  // Find the shortest precision that round-trips exactly.
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string measure_csv(const DiscreteMeasure& dm) {
  std::ostringstream out;
  out << "w";
  for (Eigen::Index a = 0; a < dm.dim(); ++a) out << ",x" << (a + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < dm.size(); ++i) {
    out << format_double(dm.weights(i));
    for (Eigen::Index a = 0; a < dm.dim(); ++a) {
      out << "," << format_double(dm.points(i, a));
    }
    out << "\n";
  }
  return out.str();
}

std::string map_csv(const Vector& weights, const Matrix& src,
                    const Matrix& dst) {
  if (src.rows() != dst.rows() || src.rows() != weights.size()) {
    throw Error("map_csv: shape mismatch");
  }
  std::ostringstream out;
  out << "w";
  for (Eigen::Index a = 0; a < src.cols(); ++a) out << ",src_" << (a + 1);
  for (Eigen::Index a = 0; a < dst.cols(); ++a) out << ",dst_" << (a + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < src.rows(); ++i) {
    out << format_double(weights(i));
    for (Eigen::Index a = 0; a < src.cols(); ++a) {
      out << "," << format_double(src(i, a));
    }
    for (Eigen::Index a = 0; a < dst.cols(); ++a) {
      out << "," << format_double(dst(i, a));
    }
    out << "\n";
  }
  return out.str();
}

std::string pgm_bytes(const DensityGrid& grid) {
  const int nx = grid.resolution[0];
  const int ny = grid.resolution.size() == 2 ? grid.resolution[1] : 1;
  const double maxv = grid.values.maxCoeff();
  std::ostringstream out;
  out << "P5\n" << nx << " " << ny << "\n65535\n";
  for (int iy = ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double v = grid.values(static_cast<Eigen::Index>(iy) * nx + ix);
      const unsigned value =
          maxv > 0.0
              ? static_cast<unsigned>(std::lround(v / maxv * 65535.0))
              : 0u;
      out.put(static_cast<char>((value >> 8) & 0xff));  // big-endian
      out.put(static_cast<char>(value & 0xff));
    }
  }
  return out.str();
}

std::string grid_csv(const DensityGrid& grid) {
  const int nx = grid.resolution[0];
  const int ny = grid.resolution.size() == 2 ? grid.resolution[1] : 1;
  const bool two_d = grid.resolution.size() == 2;
  std::ostringstream out;
  out << (two_d ? "x1,x2,value" : "x1,value") << "\n";
  const double hx = (grid.domain.hi(0) - grid.domain.lo(0)) / nx;
  const double hy =
      two_d ? (grid.domain.hi(1) - grid.domain.lo(1)) / ny : 0.0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      out << format_double(grid.domain.lo(0) + (ix + 0.5) * hx);
      if (two_d) {
        out << "," << format_double(grid.domain.lo(1) + (iy + 0.5) * hy);
      }
      out << ","
          << format_double(grid.values(static_cast<Eigen::Index>(iy) * nx + ix))
          << "\n";
    }
  }
  return out.str();
}

}  // namespace eqot
