#pragma once

#include <filesystem>
#include <string>

#include "eqot/flow.hpp"
#include "eqot/measures.hpp"
#include "eqot/transport.hpp"

namespace eqot {

/// Shortest-exact-round-trip decimal form of a double ("%.17g" precision,
/// trimmed), so serialized numbers are byte-stable across runs.
std::string format_double(double v);

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe partial content.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes);

/// CSV with header "w,x1..xp".
std::string measure_csv(const DiscreteMeasure& dm);

/// CSV with header "w,src_1..src_p,dst_1..dst_p".
std::string map_csv(const Vector& weights, const Matrix& src,
                    const Matrix& dst);

/// Binary 16-bit PGM (P5), max-value-normalized. 2-D grids are written with
/// the last row (highest second coordinate) first so images read naturally;
/// 1-D grids become a single-row image.
std::string pgm_bytes(const DensityGrid& grid);

/// CSV with header "x1[,x2],value" over cell centers.
std::string grid_csv(const DensityGrid& grid);

}  // namespace eqot
