#pragma once

#include <string>

#include "eqot/costs.hpp"
#include "eqot/measures.hpp"
#include "eqot/transport.hpp"

namespace eqot {

struct OutputConfig {
  std::string directory = "out";
  std::vector<double> frame_times = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<int> grid = {256, 256};
  double bandwidth = 0.0;
  bool write_particles = false;
};

/// Fully resolved run description. Presets expand to explicit matrices at
/// parse time.
struct RunConfig {
  std::string system_preset;  // empty when A/B were given explicitly
  Matrix A, B;
  CostKind cost_kind = CostKind::MinEnergy;
  Matrix Q, Ru;  // resolved to full matrices (possibly empty Q for MinEnergy)
  MeasureSpec mu, nu;
  SolveOptions solve;
  OutputConfig output;

  LTISystem make_system() const { return LTISystem(A, B); }
  RunningCostSpec make_cost_spec() const;
};

/// Parses a JSON document into a RunConfig. Throws ParseError carrying the
/// dotted path of the offending field.
RunConfig parse_config(const std::string& json_text);

/// Canonical JSON form; parse(serialize(c)) is structurally identical to c.
std::string serialize_config(const RunConfig& config);

}  // namespace eqot
