// Experiment runner.
//
//   chaosgeo iho-response --omega 1 --t-grid 0:5:11
//   chaosgeo otoc-check --omega 1
//   chaosgeo lyapunov --system harmonic --omega 1 --window 20:50
//   chaosgeo --config run.json
//
// Exit codes: 0 all checks passed, 1 pipeline failure or failed check,
// 2 invalid configuration.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "chaosgeo/experiment.hpp"

namespace {

struct Flags {
  std::string experiment;
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string t_grid;
  std::map<std::string, std::string> params;
};

chaosgeo::ExperimentConfig build_config(const Flags& f) {
  chaosgeo::ExperimentConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw chaosgeo::ConfigError("cannot read config file '" + f.config + "'");
    chaosgeo::json j;
    try {
      j = chaosgeo::json::parse(in);
    } catch (const chaosgeo::json::exception& e) {
      throw chaosgeo::ConfigError(std::string("config file: ") + e.what());
    }
    cfg = chaosgeo::ExperimentConfig::from_json(j);
  }
  if (!f.experiment.empty()) cfg.experiment = f.experiment;
  if (const char* env = std::getenv("CHAOSGEO_OUTPUT"); env && *env) cfg.output = env;
  if (!f.output.empty()) cfg.output = f.output;
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (!f.t_grid.empty()) cfg.time_grid = chaosgeo::TimeGrid::parse(f.t_grid);
  for (const auto& [k, v] : f.params) cfg.parameters[k] = v;
  cfg.solver.seed = cfg.seed;
  if (cfg.experiment.empty()) throw chaosgeo::ConfigError("no experiment given");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complexity-geometry response experiments"};
  Flags f;
  app.add_option("experiment", f.experiment,
                 "iho-response | lyapunov | otoc-check | qubit-geodesic | state-response | sweep");
  app.add_option("--config", f.config, "JSON experiment config");
  app.add_option("--output", f.output, "output directory (env CHAOSGEO_OUTPUT)");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--jobs", f.jobs, "concurrent sweep points");
  app.add_option("--t-grid", f.t_grid, "time grid start:end:npoints");
  const std::pair<const char*, const char*> params[] = {
      {"omega", "oscillator frequency"},
      {"system", "iho | harmonic | free | quartic (lyapunov) | all (otoc-check)"},
      {"window", "Lyapunov fit window t_min:t_max"},
      {"weights", "qubit cost weights x,y,z"},
      {"angle", "qubit-geodesic target azimuth"},
      {"pipeline", "state-response pipeline: gaussian | qubit"},
      {"omegas", "sweep values, comma separated"},
      {"x0", "initial position for the classical oracle"},
  };
  std::map<std::string, std::string> raw;
  for (const auto& [name, help] : params) app.add_option(std::string("--") + name, raw[name], help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : 2;
  }
  for (const auto& [k, v] : raw)
    if (app.count("--" + k) > 0) f.params[k] = v;

  chaosgeo::ExperimentConfig cfg;
  try {
    cfg = build_config(f);
    const chaosgeo::ExperimentReport report = chaosgeo::run_experiment(cfg);
    for (const auto& c : report.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " tol=" << c.tolerance
                << "\n";
    if (!report.error.empty()) {
      std::cerr << "error: " << report.error << "\n";
      return 1;
    }
    std::cout << "report: " << (std::filesystem::path(cfg.output) / "report.json").string() << "\n";
    return report.passed() ? 0 : 1;
  } catch (const chaosgeo::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
