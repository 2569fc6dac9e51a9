#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "eqot/runner.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSolver = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw eqot::Error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport of LTI systems over equilibrium measures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool compare_euclidean = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
  };
  CLI::App* validate = app.add_subcommand(
      "validate", "Run the assumption probes without solving");
  add_common(validate);
  CLI::App* solve =
      app.add_subcommand("solve", "Solve the transport problem");
  add_common(solve);
  CLI::App* frames = app.add_subcommand(
      "frames", "Solve and write displacement-interpolation frames");
  add_common(frames);
  frames->add_flag("--compare-euclidean", compare_euclidean,
                   "also write the single-integrator baseline frames");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string text = read_file(config_path);
    eqot::RunConfig config;
    try {
      config = eqot::parse_config(text);
    } catch (const eqot::ParseError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitParse;
    }
    if (!out_dir.empty()) config.output.directory = out_dir;

    if (app.got_subcommand(validate)) {
      const eqot::RunReport report = eqot::cmd_validate(config);
      std::cout << report.to_json();
      if (!report.probes.pass()) {
        std::cerr << "validation failed\n";
        return kExitValidation;
      }
      return 0;
    }

    const std::filesystem::path out(config.output.directory);
    eqot::RunReport report;
    try {
      if (app.got_subcommand(solve)) {
        report = eqot::cmd_solve(config, out);
      } else {
        report = eqot::cmd_frames(config, out, compare_euclidean);
      }
    } catch (const eqot::ValidationFailure& e) {
      std::cerr << "validation failed: " << e.what() << "\n";
      return kExitValidation;
    } catch (const eqot::ConvergenceError& e) {
      std::cerr << "solver failed: " << e.what() << "\n";
      return kExitSolver;
    }
    std::cout << report.to_json();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
