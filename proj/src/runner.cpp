#include "eqot/runner.hpp"

#include <chrono>

#include <json.hpp>

#include "eqot/flow.hpp"
#include "eqot/io.hpp"

namespace eqot {

namespace {

using nlohmann::json;

struct Pipeline {
  LTISystem system;
  EquilibriumSpace space;
  CostModel model;
};

ProbeResults run_probes(const RunConfig& config, const Pipeline& pipe) {
  ProbeResults probes;
  probes.eq_dim = pipe.space.eq_dim();
  try {
    const Gramian g = gramian(pipe.system);
    probes.controllable = true;
    probes.controllability_min_eig = g.min_eigenvalue;
  } catch (const UncontrollableError& e) {
    probes.controllable = false;
    probes.controllability_min_eig = e.min_eigenvalue;
  }

  const RunningCostSpec spec = config.make_cost_spec();
  probes.q_structure_residual = q_structure_residual(spec, pipe.space);
  const double q_scale =
      spec.Q.size() > 0 ? std::max(1.0, spec.Q.cwiseAbs().maxCoeff()) : 1.0;
  probes.q_structure_ok = probes.q_structure_residual <= 1e-10 * q_scale;

  probes.translation_invariance_dev =
      translation_invariance_probe(pipe.model, pipe.space, 32,
                                   config.solve.seed ^ 0x7ea5u);
  probes.translation_invariance_ok =
      probes.translation_invariance_dev <= 1e-8;

  try {
    const ReducedCost rc = reduced_quadratic(pipe.model, pipe.space);
    probes.convexity_certificate = convexity_certificate(rc);
    probes.strictly_convex = probes.convexity_certificate > 0.0;
  } catch (const NotConvexError& e) {
    probes.convexity_certificate = e.min_eigenvalue;
    probes.strictly_convex = false;
  }
  return probes;
}

Pipeline build_pipeline(const RunConfig& config) {
  LTISystem system = config.make_system();
  EquilibriumSpace space = equilibrium_space(system);
  CostModel model(system, config.make_cost_spec());
  return Pipeline{std::move(system), std::move(space), std::move(model)};
}

json probes_to_json(const ProbeResults& probes) {
  json out;
  out["controllable"] = probes.controllable;
  out["controllability_min_eig"] = probes.controllability_min_eig;
  out["equilibrium_dim"] = probes.eq_dim;
  out["q_structure_residual"] = probes.q_structure_residual;
  out["q_structure_ok"] = probes.q_structure_ok;
  out["translation_invariance_dev"] = probes.translation_invariance_dev;
  out["translation_invariance_ok"] = probes.translation_invariance_ok;
  out["convexity_certificate"] = probes.convexity_certificate;
  out["strictly_convex"] = probes.strictly_convex;
  out["pass"] = probes.pass();
  return out;
}

json report_to_json(const RunReport& report) {
  json out;
  out["backend"] = report.backend;
  out["total_cost"] = report.total_cost;
  out["residual_mu"] = report.residual_mu;
  out["residual_nu"] = report.residual_nu;
  if (report.duality_gap) {
    out["duality_gap"] = *report.duality_gap;
  } else {
    out["duality_gap"] = nullptr;
  }
  out["iterations"] = report.iterations;
  out["wall_seconds"] = report.wall_seconds;
  out["probes"] = probes_to_json(report.probes);
  return out;
}

std::string backend_name(Backend backend) {
  switch (backend) {
    case Backend::Exact:
      return "exact";
    case Backend::Entropic:
      return "entropic";
    case Backend::Auto:
      break;
  }
  return "auto";
}

RunReport solve_with_report(const RunConfig& config, Pipeline& pipe,
                            SolveResult& result) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.probes = run_probes(config, pipe);
  if (!report.probes.pass()) {
    throw ValidationFailure("validation probes failed; run 'validate'");
  }
  result = solve_transport(pipe.system, pipe.space, pipe.model, config.mu,
                           config.nu, config.solve);
  report.backend = backend_name(result.backend_used);
  report.total_cost = result.solution.total_cost;
  report.residual_mu = result.solution.residual_mu;
  report.residual_nu = result.solution.residual_nu;
  report.iterations = result.solution.iterations;
  if (result.backend_used == Backend::Exact) {
    const Matrix C =
        cost_matrix(result.mu, result.nu, result.reduced_cost);
    report.duality_gap = result.solution.duality_gap(C) /
                         static_cast<double>(result.mu.size());
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

}  // namespace

std::string RunReport::to_json() const { return report_to_json(*this).dump(2) + "\n"; }

RunReport cmd_validate(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Pipeline pipe = build_pipeline(config);
  RunReport report;
  report.probes = run_probes(config, pipe);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

RunReport cmd_solve(const RunConfig& config,
                    const std::filesystem::path& out_dir) {
  Pipeline pipe = build_pipeline(config);
  SolveResult result;
  RunReport report = solve_with_report(config, pipe, result);
  write_file_atomic(out_dir / "map.csv",
                    map_csv(result.mu.weights, result.mu.points,
                            result.map_points));
  write_file_atomic(out_dir / "summary.json", report.to_json());
  return report;
}

RunReport cmd_frames(const RunConfig& config,
                     const std::filesystem::path& out_dir,
                     bool compare_euclidean) {
  Pipeline pipe = build_pipeline(config);
  SolveResult result;
  RunReport report = solve_with_report(config, pipe, result);
  write_file_atomic(out_dir / "map.csv",
                    map_csv(result.mu.weights, result.mu.points,
                            result.map_points));

  std::vector<int> grid = config.output.grid;
  if (static_cast<Eigen::Index>(grid.size()) != pipe.space.eq_dim()) {
    grid.assign(static_cast<std::size_t>(pipe.space.eq_dim()),
                grid.empty() ? 256 : grid[0]);
  }

  json index;
  index["times"] = config.output.frame_times;
  index["grid"] = grid;
  index["bandwidth"] = config.output.bandwidth;
  index["n_particles"] = result.mu.size();

  const auto write_frames = [&](const CostModel& model,
                                const EquilibriumSpace& space,
                                const std::string& label) {
    const FrameSet frames = displacement_interpolate(
        model, space, result.mu.points, result.map_points, result.mu.weights,
        config.output.frame_times, grid, config.output.bandwidth,
        result.mu.domain, config.output.write_particles);
    json files = json::array();
    for (std::size_t k = 0; k < frames.frames.size(); ++k) {
      const std::string stem = "frame_" + std::to_string(k) + "_" + label;
      write_file_atomic(out_dir / (stem + ".pgm"),
                        pgm_bytes(frames.frames[k]));
      files.push_back(stem + ".pgm");
      if (config.output.write_particles) {
        DiscreteMeasure cloud;
        cloud.points = frames.particle_positions[k];
        cloud.weights = result.mu.weights;
        cloud.domain = result.mu.domain;
        write_file_atomic(out_dir / (stem + ".csv"), measure_csv(cloud));
      }
    }
    index["files"][label] = files;
  };

  write_frames(pipe.model, pipe.space, "system");
  if (compare_euclidean) {
    // Euclidean baseline: the single integrator on the equilibrium
    // coordinates, interpolating the same matched samples.
    const Eigen::Index p = pipe.space.eq_dim();
    LTISystem baseline(Matrix::Zero(p, p), Matrix::Identity(p, p));
    EquilibriumSpace baseline_space = equilibrium_space(baseline);
    CostModel baseline_model(baseline, RunningCostSpec::min_energy(p));
    write_frames(baseline_model, baseline_space, "euclidean");
  }

  write_file_atomic(out_dir / "frames.json", index.dump(2) + "\n");
  write_file_atomic(out_dir / "summary.json", report.to_json());
  return report;
}

}  // namespace eqot
