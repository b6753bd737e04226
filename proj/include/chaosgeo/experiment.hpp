#pragma once

// Named experiment pipelines used by the command-line runner. Each writes CSV
// series plus a JSON report carrying its inputs, results and invariant checks.

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chaosgeo/classical.hpp"
#include "chaosgeo/io.hpp"
#include "chaosgeo/otoc.hpp"
#include "chaosgeo/response.hpp"

namespace chaosgeo {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TimeGrid {
  double start = 0.0;
  double end = 5.0;
  int n_points = 11;

  // "start:end:npoints"
  static TimeGrid parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError("time grid must be start:end:npoints, got '" + text + "'");
    TimeGrid g;
    try {
      g.start = std::stod(parts[0]);
      g.end = std::stod(parts[1]);
      g.n_points = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("time grid must be start:end:npoints, got '" + text + "'");
    }
    g.validate();
    return g;
  }

  void validate() const {
    if (!(start >= 0.0) || !(end > start) || n_points < 2)
      throw ConfigError("time grid needs t_end > t_start >= 0 and n_points >= 2");
  }

  std::vector<double> points() const {
    std::vector<double> out(n_points);
    for (int i = 0; i < n_points; ++i) out[i] = start + (end - start) * i / (n_points - 1);
    return out;
  }
};

struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> parameters;
  std::optional<TimeGrid> time_grid;
  std::string output = "chaosgeo_out";
  std::uint64_t seed = 0;
  int jobs = 1;
  SolverConfig solver;

  static const std::vector<std::string>& known() {
    static const std::vector<std::string> names = {"iho-response", "lyapunov",       "otoc-check",
                                                   "qubit-geodesic", "state-response", "sweep"};
    return names;
  }

  void validate() const {
    if (std::find(known().begin(), known().end(), experiment) == known().end())
      throw ConfigError("unknown experiment '" + experiment + "'");
    if (time_grid) time_grid->validate();
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
  }

  double number(const std::string& key, double fallback) const {
    auto it = parameters.find(key);
    if (it == parameters.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("parameter '" + key + "' is not a number: '" + it->second + "'");
    }
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = parameters.find(key);
    return it == parameters.end() ? fallback : it->second;
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const {
    auto it = parameters.find(key);
    if (it == parameters.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("parameter '" + key + "' must be a comma-separated list of numbers");
      }
    }
    if (out.empty()) throw ConfigError("parameter '" + key + "' is empty");
    return out;
  }

  std::pair<double, double> window(const std::string& key, std::pair<double, double> fallback) const {
    auto it = parameters.find(key);
    if (it == parameters.end()) return fallback;
    const auto colon = it->second.find(':');
    if (colon == std::string::npos) throw ConfigError("parameter '" + key + "' must be t_min:t_max");
    try {
      std::pair<double, double> w{std::stod(it->second.substr(0, colon)), std::stod(it->second.substr(colon + 1))};
      if (!(w.second > w.first) || w.first < 0.0) throw ConfigError("window needs 0 <= t_min < t_max");
      return w;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("parameter '" + key + "' must be t_min:t_max");
    }
  }

  // {experiment, parameters: {...}, time_grid: "a:b:n" | {start, end, n_points}, output, seed, jobs, solver}
  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig cfg;
    try {
      if (j.contains("experiment")) cfg.experiment = j.at("experiment").get<std::string>();
      if (j.contains("parameters"))
        for (const auto& [k, v] : j.at("parameters").items()) cfg.parameters[k] = v.is_string() ? v.get<std::string>() : v.dump();
      if (j.contains("time_grid")) {
        const auto& g = j.at("time_grid");
        if (g.is_string()) {
          cfg.time_grid = TimeGrid::parse(g.get<std::string>());
        } else {
          TimeGrid tg{g.at("start").get<double>(), g.at("end").get<double>(), g.at("n_points").get<int>()};
          tg.validate();
          cfg.time_grid = tg;
        }
      }
      if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
      if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
      if (j.contains("solver")) cfg.solver = solver_config_from_json(j.at("solver"));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return cfg;
  }
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  json inputs;
  json results = json::object();
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
  std::string error;

  bool passed() const {
    return error.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }

  void check(std::string name, double value, double tolerance, bool below = true, std::string detail = {}) {
    const bool ok = std::isfinite(value) && (below ? value <= tolerance : value > tolerance);
    checks.push_back({std::move(name), ok, value, tolerance, std::move(detail)});
  }

  json to_json() const {
    json cj = json::array();
    for (const auto& c : checks)
      cj.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance},
                    {"detail", c.detail}});
    json j = {{"experiment", experiment}, {"inputs", inputs},  {"results", results},
              {"checks", cj},             {"passed", passed()}, {"files", files}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

namespace detail {

inline QuadraticHamiltonian quadratic_system(const std::string& name, double omega) {
  if (name == "iho") return QuadraticHamiltonian::inverted_oscillator(omega);
  if (name == "harmonic") return QuadraticHamiltonian::harmonic_oscillator(omega);
  if (name == "free") return QuadraticHamiltonian::free_particle();
  throw ConfigError("system '" + name + "' is not quadratic (iho | harmonic | free)");
}

inline double positive(double v, const std::string& name) {
  if (!(v > 0.0)) throw ConfigError(name + " must be positive");
  return v;
}

inline std::vector<std::string> matrix_header(const std::string& prefix, const std::vector<std::string>& labels) {
  std::vector<std::string> out;
  for (const auto& k : labels)
    for (const auto& l : labels) out.push_back(prefix + "_" + k + "_" + l);
  return out;
}

inline void append_matrix(std::vector<double>& row, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
}

inline double scaled_error(const Matrix& a, const Matrix& b) { return max_abs(a - b) / std::max(1.0, max_abs(b)); }

// max_ij |a - b| / |b| with an absolute floor for vanishing reference entries.
inline double entrywise_relative(const Matrix& a, const Matrix& b, double floor = 1e-12) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double d = std::abs(a(i, j) - b(i, j));
      worst = std::max(worst, std::abs(b(i, j)) > floor ? d / std::abs(b(i, j)) : d / floor * 1e-6);
    }
  return worst;
}

inline std::string out_file(const std::filesystem::path& dir, const std::string& name, ExperimentReport& report) {
  report.files.push_back(name);
  return (dir / name).string();
}

inline void iho_response(const ExperimentConfig& cfg, const std::filesystem::path& dir, ExperimentReport& report,
                         const std::string& prefix = "") {
  const std::string system = cfg.text("system", "iho");
  const double omega = positive(cfg.number("omega", 1.0), "omega");
  const TimeGrid grid = cfg.time_grid.value_or(TimeGrid{0.0, 5.0, 11});
  const HamiltonianFunction h = quadratic_system(system, omega);
  const GeneratorSet gens = heisenberg_generators(1);
  report.inputs["system"] = system;
  report.inputs["omega"] = omega;
  report.inputs["time_grid"] = {grid.start, grid.end, grid.n_points};

  auto header = std::vector<std::string>{"t"};
  for (const auto& c : matrix_header("R", gens.active_labels())) header.push_back(c);
  header.insert(header.end(), {"s_1", "s_2", "det_R"});
  if (system == "iho")
    for (const auto& c : matrix_header("analytic", gens.active_labels())) header.push_back(c);
  CsvWriter csv(out_file(dir, prefix + "response.csv", report), header);

  double worst_analytic = 0.0, worst_det = 0.0, worst_t0 = 0.0;
  bool has_t0 = false;
  json rows = json::array();
  for (double t : grid.points()) {
    const ResponseMatrix r = unitary_response_matrix(h, gens, t);
    const ResponseSpectrum s = response_spectrum(r);
    const double det = r.entries.determinant();
    std::vector<double> row{t};
    append_matrix(row, r.entries);
    row.push_back(s.eigenvalues(0));
    row.push_back(s.eigenvalues(1));
    row.push_back(det);
    worst_det = std::max(worst_det, std::abs(det - 1.0) / std::max(1.0, r.entries.squaredNorm()));
    if (system == "iho") {
      const Matrix a = iho_response_analytic(omega, t).entries;
      append_matrix(row, a);
      worst_analytic = std::max(worst_analytic, entrywise_relative(r.entries, a));
    }
    if (t == 0.0) {
      has_t0 = true;
      worst_t0 = max_abs(r.entries - Matrix::Identity(2, 2));
    }
    csv.row(row);
    rows.push_back(to_json(r));
  }
  report.results[prefix + "response"] = rows;
  if (system == "iho") report.check(prefix + "iho_analytic_relative", worst_analytic, 1e-6);
  report.check(prefix + "det_R_equals_1", worst_det, 1e-8, true, "|det R - 1| / max(1, |R|_F^2)");
  if (has_t0) report.check(prefix + "R_t0_identity", worst_t0, 10 * 1e-5);
}

inline void lyapunov(const ExperimentConfig& cfg, const std::filesystem::path& dir, ExperimentReport& report) {
  const std::string system = cfg.text("system", "iho");
  const double omega = positive(cfg.number("omega", 1.0), "omega");
  const auto default_window = system == "harmonic" ? std::pair<double, double>{20.0, 50.0}
                                                   : std::pair<double, double>{5.0, 10.0};
  const auto window = cfg.window("window", default_window);
  const TimeGrid grid = cfg.time_grid.value_or(TimeGrid{window.first, window.second, 21});
  report.inputs["system"] = system;
  report.inputs["omega"] = omega;
  report.inputs["window"] = {window.first, window.second};
  report.inputs["time_grid"] = {grid.start, grid.end, grid.n_points};

  QRConfig qr;
  qr.transient = window.first;
  const double x0v = cfg.number("x0", 0.1);
  Vector x0(2);
  x0 << x0v, 0.0;
  if (system == "quartic") {
    const LyapunovEstimate classical = classical_lyapunov(SeparableHamiltonian::quartic(), x0, window.second, qr);
    report.results["classical"] = to_json(classical);
    report.check("classical_pairing", std::abs(classical.lambdas.sum()), 2 * classical.residual + 1e-9);
    return;
  }
  const HamiltonianFunction h = quadratic_system(system, omega);
  const GeneratorSet gens = heisenberg_generators(1);
  std::vector<ResponseSpectrum> spectra;
  CsvWriter csv(out_file(dir, "spectrum.csv", report), {"t", "s_1", "s_2", "half_log_s_1", "half_log_s_2"});
  for (double t : grid.points()) {
    spectra.push_back(response_spectrum(unitary_response_matrix(h, gens, t)));
    const Vector& s = spectra.back().eigenvalues;
    csv.row({t, s(0), s(1), 0.5 * std::log(s(0)), 0.5 * std::log(s(1))});
  }
  const LyapunovEstimate fit = lyapunov_spectrum(spectra, window);
  const LyapunovEstimate classical = classical_lyapunov(h, x0, window.second, qr);
  report.results["response"] = to_json(fit);
  report.results["classical"] = to_json(classical);
  report.check("pairing", std::abs(fit.lambdas.sum()), 2 * fit.residual + 1e-9);
  if (system == "iho") {
    report.check("lambda_plus_equals_omega", std::abs(fit.lambdas(0) - omega), 0.01);
    report.check("lambda_minus_equals_minus_omega", std::abs(fit.lambdas(1) + omega), 0.01);
    report.check("classical_agrees", max_abs(classical.lambdas - fit.lambdas), 0.01);
  } else if (system == "harmonic") {
    report.check("lambdas_vanish", max_abs(fit.lambdas), 0.05);
    report.check("classical_lambdas_vanish", max_abs(classical.lambdas), 0.05);
  }
}

inline void otoc_check(const ExperimentConfig& cfg, const std::filesystem::path& dir, ExperimentReport& report) {
  const double omega = positive(cfg.number("omega", 1.0), "omega");
  const std::string which = cfg.text("system", "all");
  const TimeGrid grid = cfg.time_grid.value_or(TimeGrid{0.0, 10.0, 21});
  std::vector<std::string> systems = which == "all" ? std::vector<std::string>{"iho", "harmonic", "free"}
                                                    : std::vector<std::string>{which};
  report.inputs["systems"] = systems;
  report.inputs["omega"] = omega;
  report.inputs["time_grid"] = {grid.start, grid.end, grid.n_points};
  const GeneratorSet gens = heisenberg_generators(1);
  const TransferMatrix tr = transfer_matrix(gens);
  const GaussianWignerState vacuum = GaussianWignerState::vacuum(1);
  Matrix squeezed_cov(2, 2);
  squeezed_cov << 2.0, 0.3, 0.3, 0.5;
  Vector shifted_mean(2);
  shifted_mean << 0.7, -1.3;
  const GaussianWignerState other(shifted_mean, squeezed_cov);

  double worst_corr = 0.0, worst_eq18 = 0.0, worst_state = 0.0, worst_t0 = 0.0;
  for (const auto& name : systems) {
    const HamiltonianFunction h = quadratic_system(name, omega);
    CsvWriter csv(out_file(dir, "otoc_" + name + ".csv", report),
                  {"t", "residual_RT_O", "residual_eq18", "O_x_x", "O_x_p", "O_p_x", "O_p_p"});
    double sys_corr = 0.0;
    for (double t : grid.points()) {
      const OtocMatrix o = otoc_matrix(h, gens, t);
      const ResponseMatrix r = unitary_response_matrix(h, gens, t);
      const double corr = check_correspondence(r, tr, o) / std::max(1.0, max_abs(o.coeffs));
      const AveragedOtoc avg = averaged_otoc_identity(vacuum, h, gens, t);
      const AveragedOtoc avg2 = averaged_otoc_identity(other, h, gens, t);
      const double eq18 = scaled_error(avg.lhs, avg.rhs);
      worst_state = std::max(worst_state, scaled_error(avg2.lhs, avg.lhs));
      if (t == 0.0) worst_t0 = std::max(worst_t0, max_abs(o.coeffs - tr.coeffs));
      worst_corr = std::max(worst_corr, corr);
      worst_eq18 = std::max(worst_eq18, eq18);
      sys_corr = std::max(sys_corr, corr);
      std::vector<double> row{t, corr, eq18};
      append_matrix(row, o.coeffs);
      csv.row(row);
    }
    report.results[name] = {{"max_residual", sys_corr}};
  }
  report.results["transfer_i_T"] = matrix_json(tr.i_times());
  report.check("RT_equals_O", worst_corr, 1e-10, true, "max |R T - O| / max(1, |O|)");
  report.check("averaged_identity", worst_eq18, 1e-10, true, "max |lhs - rhs| / max(1, |rhs|)");
  report.check("lhs_state_independent", worst_state, 1e-10);
  if (grid.start == 0.0) report.check("O0_equals_T", worst_t0, 0.0);
}

// Distance of Bloch samples from the plane through the origin and both endpoints.
inline double great_circle_deviation(const std::vector<Eigen::Vector3d>& samples, const Eigen::Vector3d& a,
                                     const Eigen::Vector3d& b) {
  const Eigen::Vector3d n = a.cross(b).normalized();
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, std::abs(n.dot(s)));
  return worst;
}

inline void qubit_geodesic(const ExperimentConfig& cfg, const std::filesystem::path& dir, ExperimentReport& report) {
  const auto weights = cfg.list("weights", {1.0, 1.0, 1.5});
  const double angle = cfg.number("angle", 0.8 * kPi);
  if (weights.size() != 3) throw ConfigError("weights must list three values (x, y, z)");
  const GeneratorSet gens = pauli_generators(1);
  CVector psi_r(2), psi_t(2);
  psi_r << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  psi_t << 1.0 / std::sqrt(2.0), std::exp(Complex(0.0, angle)) / std::sqrt(2.0);
  report.inputs["weights"] = weights;
  report.inputs["angle"] = angle;
  report.inputs["bloch_reference"] = {1.0, 0.0, 0.0};
  report.inputs["bloch_target"] = {std::cos(angle), std::sin(angle), 0.0};
  SolverConfig solver = cfg.solver;
  solver.seed = cfg.seed;

  const Eigen::Vector3d a = bloch_vector(psi_r), b = bloch_vector(psi_t);
  double deviations[2] = {0.0, 0.0};
  const std::pair<std::string, CostWeights> cases[2] = {{"isotropic", CostWeights::isotropic(gens)},
                                                        {"anisotropic", CostWeights::for_set(gens, weights)}};
  for (int c = 0; c < 2; ++c) {
    const GeodesicResult g = state_complexity(psi_r, psi_t, gens, cases[c].second, solver);
    std::vector<Eigen::Vector3d> samples;
    CsvWriter csv(out_file(dir, "geodesic_" + cases[c].first + ".csv", report), {"sigma", "x", "y", "z"});
    const auto grid = g.path.grid();
    for (std::size_t k = 0; k < g.trajectory.size(); ++k) {
      samples.push_back(bloch_vector(g.trajectory[k] * psi_r));
      csv.row({grid[k], samples.back()(0), samples.back()(1), samples.back()(2)});
    }
    deviations[c] = great_circle_deviation(samples, a, b);
    report.results[cases[c].first] = to_json(g, &psi_r);
    report.results[cases[c].first]["great_circle_deviation"] = deviations[c];
    report.check(cases[c].first + "_converged", g.converged ? 0.0 : 1.0, 0.0);
    report.check(cases[c].first + "_reaches_target", (samples.back() - b).norm(), 1e-6);
  }
  report.check("isotropic_on_great_circle", deviations[0], 1e-6);
  report.check("anisotropic_leaves_great_circle", deviations[1], 1e-3, false);
}

// Adjoint-rotation prediction for the qubit state response: the perturbing
// Pauli vector rotated back through e^{-iHt}, with the component along the
// evolved state's Bloch vector removed (it only changes the phase).
inline Matrix qubit_state_prediction(const CMatrix& h, const CVector& psi, const GeneratorSet& gens, double t) {
  const CMatrix u = hermitian_exp(h, t);
  const Eigen::Vector3d n = bloch_vector(u * psi);
  Matrix out(3, 3);
  for (int k = 0; k < 3; ++k) {
    const CMatrix mk = u * gens[k].matrix * u.adjoint();
    Eigen::Vector3d v;
    for (int l = 0; l < 3; ++l) v(l) = 0.5 * (mk * gens[l].matrix).trace().real();
    v -= n.dot(v) * n;
    out.row(k) = v.transpose();
  }
  return out;
}

inline void state_response(const ExperimentConfig& cfg, const std::filesystem::path& dir, ExperimentReport& report) {
  const std::string pipeline = cfg.text("pipeline", "gaussian");
  const double omega = positive(cfg.number("omega", 1.0), "omega");
  report.inputs["pipeline"] = pipeline;
  report.inputs["omega"] = omega;
  if (pipeline == "gaussian") {
    const std::string system = cfg.text("system", "iho");
    const TimeGrid grid = cfg.time_grid.value_or(TimeGrid{0.0, 5.0, 11});
    report.inputs["system"] = system;
    report.inputs["time_grid"] = {grid.start, grid.end, grid.n_points};
    const HamiltonianFunction h = quadratic_system(system, omega);
    const GeneratorSet gens = heisenberg_generators(1);
    const GaussianWignerState psi = GaussianWignerState::vacuum(1);
    auto header = std::vector<std::string>{"t"};
    for (const auto& c : matrix_header("Rs", gens.active_labels())) header.push_back(c);
    for (const auto& c : matrix_header("jacobian", gens.active_labels())) header.push_back(c);
    CsvWriter csv(out_file(dir, "state_response.csv", report), header);
    double worst = 0.0;
    json rows = json::array();
    for (double t : grid.points()) {
      const ResponseMatrix r = state_response_matrix(psi, h, gens, t);
      const Matrix jac = jacobian_matrix(h, psi.mean, t);
      worst = std::max(worst, scaled_error(r.entries, jac.transpose()));
      std::vector<double> row{t};
      append_matrix(row, r.entries);
      append_matrix(row, jac);
      csv.row(row);
      rows.push_back(to_json(r));
    }
    report.results["response"] = rows;
    report.check("Rs_equals_jacobian", worst, 1e-6, true, "R^s_ki vs d x_t^i / d x^k, scaled by max(1, |J|)");
  } else if (pipeline == "qubit") {
    const TimeGrid grid = cfg.time_grid.value_or(TimeGrid{0.0, 1.0, 5});
    report.inputs["time_grid"] = {grid.start, grid.end, grid.n_points};
    const GeneratorSet gens = pauli_generators(1);
    const CMatrix h = omega * pauli('Z');
    CVector psi(2);
    psi << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    DiffConfig diff;
    diff.solver.seed = cfg.seed;
    auto header = std::vector<std::string>{"t"};
    for (const auto& c : matrix_header("Rs", gens.active_labels())) header.push_back(c);
    CsvWriter csv(out_file(dir, "state_response.csv", report), header);
    double worst = 0.0;
    int unreliable = 0;
    json rows = json::array();
    for (double t : grid.points()) {
      const ResponseMatrix r = state_response_matrix(psi, h, gens, t, diff);
      worst = std::max(worst, max_abs(r.entries - qubit_state_prediction(h, psi, gens, t)));
      unreliable += static_cast<int>(r.unreliable.count());
      std::vector<double> row{t};
      append_matrix(row, r.entries);
      csv.row(row);
      rows.push_back(to_json(r));
    }
    report.results["response"] = rows;
    report.check("Rs_matches_adjoint_prediction", worst, 1e-4);
    report.check("no_unreliable_entries", unreliable, 0.0);
  } else {
    throw ConfigError("pipeline must be gaussian or qubit");
  }
}

inline void sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir, ExperimentReport& report) {
  const auto omegas = cfg.list("omegas", {0.5, 1.0, 2.0});
  report.inputs["omegas"] = omegas;
  report.inputs["jobs"] = cfg.jobs;
  std::vector<ExperimentReport> parts(omegas.size());
  std::vector<std::string> errors(omegas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < omegas.size(); i = next++) {
      ExperimentConfig point = cfg;
      point.experiment = "iho-response";
      point.parameters["omega"] = CsvWriter::format(omegas[i]);
      try {
        iho_response(point, dir, parts[i], "sweep_" + std::to_string(i) + "_");
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(cfg.jobs, static_cast<int>(omegas.size()));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  json points = json::array();
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error("sweep point " + std::to_string(i) + ": " + errors[i]);
    for (auto& c : parts[i].checks) report.checks.push_back(c);
    for (auto& f : parts[i].files) report.files.push_back(f);
    points.push_back({{"index", i}, {"omega", omegas[i]}, {"inputs", parts[i].inputs}});
  }
  report.results["points"] = points;
}

}  // namespace detail

// Runs the named pipeline and writes report.json (also on pipeline failure,
// with the error recorded). ConfigError propagates for invalid configs.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::filesystem::path dir(cfg.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("cannot create output directory '" + cfg.output + "'");
  ExperimentReport report;
  report.experiment = cfg.experiment;
  report.inputs = {{"seed", cfg.seed}, {"parameters", cfg.parameters}, {"solver", to_json(cfg.solver)}};
  try {
    if (cfg.experiment == "iho-response") detail::iho_response(cfg, dir, report);
    else if (cfg.experiment == "lyapunov") detail::lyapunov(cfg, dir, report);
    else if (cfg.experiment == "otoc-check") detail::otoc_check(cfg, dir, report);
    else if (cfg.experiment == "qubit-geodesic") detail::qubit_geodesic(cfg, dir, report);
    else if (cfg.experiment == "state-response") detail::state_response(cfg, dir, report);
    else detail::sweep(cfg, dir, report);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    report.error = e.what();
  }
  report.files.push_back("report.json");
  write_json((dir / "report.json").string(), report.to_json());
  return report;
}

}  // namespace chaosgeo
