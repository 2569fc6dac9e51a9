#include "eqot/config.hpp"

#include <json.hpp>

namespace eqot {

namespace {

using nlohmann::json;

const json& require(const json& j, const std::string& key,
                    const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(path.empty() ? key : path + "." + key, "missing field");
  }
  return *it;
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  return j.get<double>();
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path, "expected a string");
  return j.get<std::string>();
}

Vector as_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ParseError(path, "expected a non-empty array of numbers");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        as_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ParseError(path, "expected a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  Matrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector row = as_vector(j[i], path + "[" + std::to_string(i) + "]");
    if (i == 0) {
      m.resize(static_cast<Eigen::Index>(rows), row.size());
    } else if (row.size() != m.cols()) {
      throw ParseError(path, "rows have inconsistent lengths");
    }
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index jj = 0; jj < m.cols(); ++jj) row.push_back(m(i, jj));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void parse_system(const json& j, RunConfig& config) {
  const std::string path = "system";
  if (j.contains("preset")) {
    const std::string preset = as_string(j["preset"], join(path, "preset"));
    config.system_preset = preset;
    if (preset == "double_integrator_1d") {
      config.A = Matrix{{0, 1}, {0, 0}};
      config.B = Matrix{{0}, {1}};
    } else if (preset == "double_integrator_2d") {
      config.A = Matrix{{0, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 0, 0}};
      config.B = Matrix{{0, 0}, {1, 0}, {0, 0}, {0, 1}};
    } else if (preset == "single_integrator") {
      Eigen::Index dim = 2;
      if (j.contains("dim")) {
        dim = as_integer(j["dim"], join(path, "dim"));
        if (dim < 1) throw ParseError(join(path, "dim"), "must be >= 1");
      }
      config.A = Matrix::Zero(dim, dim);
      config.B = Matrix::Identity(dim, dim);
    } else {
      throw ParseError(join(path, "preset"), "unknown preset '" + preset + "'");
    }
    return;
  }
  config.A = as_matrix(require(j, "A", path), join(path, "A"));
  config.B = as_matrix(require(j, "B", path), join(path, "B"));
}

void parse_cost(const json& j, RunConfig& config) {
  const Eigen::Index d = config.A.rows();
  const Eigen::Index m = config.B.cols();
  const std::string path = "cost";
  std::string kind = "min_energy";
  if (j.contains("kind")) kind = as_string(j["kind"], join(path, "kind"));
  if (kind == "min_energy") {
    config.cost_kind = CostKind::MinEnergy;
  } else if (kind == "lq") {
    config.cost_kind = CostKind::LQ;
  } else {
    throw ParseError(join(path, "kind"), "expected 'min_energy' or 'lq'");
  }
  config.Ru = Matrix::Identity(m, m);
  if (j.contains("Ru")) config.Ru = as_matrix(j["Ru"], join(path, "Ru"));
  if (config.cost_kind == CostKind::LQ) {
    config.Q = Matrix::Zero(d, d);
    if (j.contains("Q")) config.Q = as_matrix(j["Q"], join(path, "Q"));
  } else if (j.contains("Q")) {
    throw ParseError(join(path, "Q"), "only valid for LQ costs");
  }
}

MeasureSpec parse_measure(const json& j, const std::string& path) {
  MeasureSpec spec;
  const std::string kind = as_string(require(j, "kind", path), join(path, "kind"));
  const json& box = require(j, "box", path);
  spec.domain.lo = as_vector(require(box, "lo", join(path, "box")),
                             join(path, "box.lo"));
  spec.domain.hi = as_vector(require(box, "hi", join(path, "box")),
                             join(path, "box.hi"));

  const auto parse_components = [&](bool gaussian) {
    const json& comps = require(j, "components", path);
    if (!comps.is_array() || comps.empty()) {
      throw ParseError(join(path, "components"), "expected a non-empty array");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const std::string cpath =
          join(path, "components[" + std::to_string(k) + "]");
      MixtureComponent c;
      c.center = as_vector(require(comps[k], "center", cpath),
                           join(cpath, "center"));
      c.weight = 1.0;
      if (comps[k].contains("weight")) {
        c.weight = as_number(comps[k]["weight"], join(cpath, "weight"));
      }
      if (c.weight < 0.0) throw ParseError(join(cpath, "weight"), "negative");
      if (gaussian) {
        if (comps[k].contains("covariance")) {
          c.covariance =
              as_matrix(comps[k]["covariance"], join(cpath, "covariance"));
        } else if (comps[k].contains("sigma")) {
          const double s = as_number(comps[k]["sigma"], join(cpath, "sigma"));
          c.covariance =
              s * s * Matrix::Identity(c.center.size(), c.center.size());
        } else {
          throw ParseError(join(cpath, "covariance"), "missing field");
        }
      } else {
        c.radius = as_number(require(comps[k], "radius", cpath),
                             join(cpath, "radius"));
      }
      total += c.weight;
      spec.components.push_back(std::move(c));
    }
    if (!(total > 0.0)) {
      throw ParseError(join(path, "components"), "weights sum to zero");
    }
    for (auto& c : spec.components) c.weight /= total;
  };

  if (kind == "uniform_disks") {
    spec.kind = MeasureKind::UniformDiskMixture;
    parse_components(false);
  } else if (kind == "gaussian_mixture") {
    spec.kind = MeasureKind::GaussianMixture;
    parse_components(true);
  } else if (kind == "grid_density") {
    spec.kind = MeasureKind::GridDensity;
    const json& res = require(j, "resolution", path);
    if (!res.is_array() || res.empty()) {
      throw ParseError(join(path, "resolution"), "expected an array");
    }
    for (std::size_t k = 0; k < res.size(); ++k) {
      spec.grid_resolution.push_back(static_cast<int>(
          as_integer(res[k], join(path, "resolution[" + std::to_string(k) + "]"))));
    }
    spec.grid_values = as_vector(require(j, "values", path), join(path, "values"));
    const double total = spec.grid_values.sum();
    if (!(total > 0.0)) throw ParseError(join(path, "values"), "sum to zero");
    spec.grid_values /= total;
  } else if (kind == "point_cloud") {
    spec.kind = MeasureKind::PointCloud;
    spec.points = as_matrix(require(j, "points", path), join(path, "points"));
    spec.weights = as_vector(require(j, "weights", path), join(path, "weights"));
    const double total = spec.weights.sum();
    if (!(total > 0.0)) throw ParseError(join(path, "weights"), "sum to zero");
    spec.weights /= total;
  } else {
    throw ParseError(join(path, "kind"), "unknown measure kind '" + kind + "'");
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
  return spec;
}

void parse_solver(const json& j, RunConfig& config) {
  const std::string path = "solver";
  if (j.contains("backend")) {
    const std::string backend = as_string(j["backend"], join(path, "backend"));
    if (backend == "auto") {
      config.solve.backend = Backend::Auto;
    } else if (backend == "exact") {
      config.solve.backend = Backend::Exact;
    } else if (backend == "entropic") {
      config.solve.backend = Backend::Entropic;
    } else {
      throw ParseError(join(path, "backend"),
                       "expected 'auto', 'exact' or 'entropic'");
    }
  }
  if (j.contains("n")) {
    config.solve.n = as_integer(j["n"], join(path, "n"));
    if (config.solve.n < 1) throw ParseError(join(path, "n"), "must be >= 1");
  }
  if (j.contains("mode")) {
    const std::string mode = as_string(j["mode"], join(path, "mode"));
    if (mode == "grid") {
      config.solve.mode = SampleMode::Grid;
    } else if (mode == "montecarlo") {
      config.solve.mode = SampleMode::MonteCarlo;
    } else {
      throw ParseError(join(path, "mode"), "expected 'grid' or 'montecarlo'");
    }
  }
  if (j.contains("seed")) {
    config.solve.seed =
        static_cast<std::uint64_t>(as_integer(j["seed"], join(path, "seed")));
  }
  if (j.contains("exact_cap")) {
    config.solve.exact_cap = as_integer(j["exact_cap"], join(path, "exact_cap"));
  }
  if (j.contains("epsilon_final")) {
    config.solve.solver.epsilon_final =
        as_number(j["epsilon_final"], join(path, "epsilon_final"));
  }
  if (j.contains("epsilon_decay")) {
    config.solve.solver.epsilon_decay =
        as_number(j["epsilon_decay"], join(path, "epsilon_decay"));
  }
  if (j.contains("max_iterations")) {
    config.solve.solver.max_iterations = static_cast<int>(
        as_integer(j["max_iterations"], join(path, "max_iterations")));
  }
  if (j.contains("marginal_tolerance")) {
    config.solve.solver.marginal_tolerance =
        as_number(j["marginal_tolerance"], join(path, "marginal_tolerance"));
  }
  try {
    config.solve.solver.validate();
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
}

void parse_output(const json& j, RunConfig& config) {
  const std::string path = "output";
  if (j.contains("directory")) {
    config.output.directory = as_string(j["directory"], join(path, "directory"));
  }
  if (j.contains("frame_times")) {
    const json& times = j["frame_times"];
    if (!times.is_array() || times.empty()) {
      throw ParseError(join(path, "frame_times"), "expected an array");
    }
    config.output.frame_times.clear();
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = as_number(
          times[k], join(path, "frame_times[" + std::to_string(k) + "]"));
      if (t < 0.0 || t > 1.0) {
        throw ParseError(join(path, "frame_times"), "times must lie in [0, 1]");
      }
      config.output.frame_times.push_back(t);
    }
  }
  if (j.contains("grid")) {
    const json& grid = j["grid"];
    if (!grid.is_array() || grid.empty() || grid.size() > 2) {
      throw ParseError(join(path, "grid"), "expected one or two resolutions");
    }
    config.output.grid.clear();
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const int r = static_cast<int>(
          as_integer(grid[k], join(path, "grid[" + std::to_string(k) + "]")));
      if (r < 1) throw ParseError(join(path, "grid"), "must be >= 1");
      config.output.grid.push_back(r);
    }
  }
  if (j.contains("bandwidth")) {
    config.output.bandwidth = as_number(j["bandwidth"], join(path, "bandwidth"));
    if (config.output.bandwidth < 0.0) {
      throw ParseError(join(path, "bandwidth"), "must be >= 0");
    }
  }
  if (j.contains("write_particles")) {
    if (!j["write_particles"].is_boolean()) {
      throw ParseError(join(path, "write_particles"), "expected a boolean");
    }
    config.output.write_particles = j["write_particles"].get<bool>();
  }
}

}  // namespace

RunningCostSpec RunConfig::make_cost_spec() const {
  if (cost_kind == CostKind::MinEnergy) {
    RunningCostSpec spec = RunningCostSpec::min_energy(B.cols());
    spec.Ru = Ru;
    return spec;
  }
  return RunningCostSpec::lq(Q, Ru);
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("(document)", e.what());
  }
  if (!doc.is_object()) throw ParseError("(document)", "expected an object");

  RunConfig config;
  parse_system(require(doc, "system", ""), config);
  try {
    (void)config.make_system();
  } catch (const Error& e) {
    throw ParseError("system", e.what());
  }
  if (doc.contains("cost")) {
    parse_cost(doc["cost"], config);
  } else {
    parse_cost(json::object(), config);
  }
  const json& measures = require(doc, "measures", "");
  config.mu = parse_measure(require(measures, "mu", "measures"), "measures.mu");
  config.nu = parse_measure(require(measures, "nu", "measures"), "measures.nu");
  if (doc.contains("solver")) parse_solver(doc["solver"], config);
  if (doc.contains("output")) parse_output(doc["output"], config);
  return config;
}

std::string serialize_config(const RunConfig& config) {
  json doc;
  json system;
  if (!config.system_preset.empty()) system["preset"] = config.system_preset;
  system["A"] = matrix_to_json(config.A);
  system["B"] = matrix_to_json(config.B);
  doc["system"] = system;

  json cost;
  cost["kind"] = config.cost_kind == CostKind::MinEnergy ? "min_energy" : "lq";
  if (config.cost_kind == CostKind::LQ) cost["Q"] = matrix_to_json(config.Q);
  cost["Ru"] = matrix_to_json(config.Ru);
  doc["cost"] = cost;

  const auto measure_to_json = [](const MeasureSpec& spec) {
    json out;
    out["box"] = {{"lo", vector_to_json(spec.domain.lo)},
                  {"hi", vector_to_json(spec.domain.hi)}};
    switch (spec.kind) {
      case MeasureKind::UniformDiskMixture:
      case MeasureKind::GaussianMixture: {
        out["kind"] = spec.kind == MeasureKind::UniformDiskMixture
                          ? "uniform_disks"
                          : "gaussian_mixture";
        json comps = json::array();
        for (const auto& c : spec.components) {
          json comp;
          comp["center"] = vector_to_json(c.center);
          comp["weight"] = c.weight;
          if (spec.kind == MeasureKind::UniformDiskMixture) {
            comp["radius"] = c.radius;
          } else {
            comp["covariance"] = matrix_to_json(c.covariance);
          }
          comps.push_back(comp);
        }
        out["components"] = comps;
        break;
      }
      case MeasureKind::GridDensity:
        out["kind"] = "grid_density";
        out["resolution"] = spec.grid_resolution;
        out["values"] = vector_to_json(spec.grid_values);
        break;
      case MeasureKind::PointCloud:
        out["kind"] = "point_cloud";
        out["points"] = matrix_to_json(spec.points);
        out["weights"] = vector_to_json(spec.weights);
        break;
    }
    return out;
  };
  doc["measures"] = {{"mu", measure_to_json(config.mu)},
                     {"nu", measure_to_json(config.nu)}};

  json solver;
  switch (config.solve.backend) {
    case Backend::Auto:
      solver["backend"] = "auto";
      break;
    case Backend::Exact:
      solver["backend"] = "exact";
      break;
    case Backend::Entropic:
      solver["backend"] = "entropic";
      break;
  }
  solver["n"] = config.solve.n;
  solver["mode"] =
      config.solve.mode == SampleMode::Grid ? "grid" : "montecarlo";
  solver["seed"] = config.solve.seed;
  solver["exact_cap"] = config.solve.exact_cap;
  solver["epsilon_final"] = config.solve.solver.epsilon_final;
  solver["epsilon_decay"] = config.solve.solver.epsilon_decay;
  solver["max_iterations"] = config.solve.solver.max_iterations;
  solver["marginal_tolerance"] = config.solve.solver.marginal_tolerance;
  doc["solver"] = solver;

  json output;
  output["directory"] = config.output.directory;
  output["frame_times"] = config.output.frame_times;
  output["grid"] = config.output.grid;
  output["bandwidth"] = config.output.bandwidth;
  output["write_particles"] = config.output.write_particles;
  doc["output"] = output;
  return doc.dump(2) + "\n";
}

}  // namespace eqot
