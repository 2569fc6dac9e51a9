#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "eqot/config.hpp"

namespace eqot {

/// A validation probe failed; maps to the validation exit code.
class ValidationFailure : public Error {
 public:
  using Error::Error;
};

struct ProbeResults {
  bool controllable = false;
  double controllability_min_eig = 0.0;
  Eigen::Index eq_dim = 0;
  double q_structure_residual = 0.0;
  bool q_structure_ok = false;
  double translation_invariance_dev = 0.0;
  bool translation_invariance_ok = false;
  double convexity_certificate = 0.0;
  bool strictly_convex = false;

  bool pass() const {
    return controllable && eq_dim >= 1 && q_structure_ok &&
           translation_invariance_ok && strictly_convex;
  }
};

struct RunReport {
  ProbeResults probes;
  std::string backend = "none";
  double total_cost = 0.0;
  double residual_mu = 0.0;
  double residual_nu = 0.0;
  std::optional<double> duality_gap;
  int iterations = 0;
  double wall_seconds = 0.0;

  std::string to_json() const;
};

/// Runs the assumption probes (controllability, Q structure, translation
/// invariance, convexity certificate) without solving.
RunReport cmd_validate(const RunConfig& config);

/// Validates, solves, and writes summary.json + map.csv atomically into
/// out_dir. Throws ValidationFailure when a probe fails.
RunReport cmd_solve(const RunConfig& config,
                    const std::filesystem::path& out_dir);

/// Solves and writes displacement-interpolation frames (PGM per time plus a
/// frames.json index). With compare_euclidean, also writes the
/// single-integrator baseline for the same matched samples.
RunReport cmd_frames(const RunConfig& config,
                     const std::filesystem::path& out_dir,
                     bool compare_euclidean);

}  // namespace eqot
