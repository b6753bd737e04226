#pragma once

// JSON and CSV interchange.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaosgeo/geometry.hpp"
#include "chaosgeo/response.hpp"

namespace chaosgeo {

using json = nlohmann::json;

// {kind: "matrix" | "phase-space", labels: [...], matrices: [[[re, im], ...] row-major] | coeffs: [[...]],
//  identity_index: optional}
inline GeneratorSet generator_set_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const auto labels = j.at("labels").get<std::vector<std::string>>();
  std::vector<Generator> gens;
  if (kind == "matrix") {
    const auto& mats = j.at("matrices");
    if (mats.size() != labels.size()) throw std::invalid_argument("generator JSON: one matrix per label");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& flat = mats[i];
      const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
      if (n * n != static_cast<Eigen::Index>(flat.size()))
        throw std::invalid_argument("generator JSON: matrix '" + labels[i] + "' is not square");
      CMatrix m(n, n);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
          const auto& z = flat[static_cast<std::size_t>(r * n + c)];
          m(r, c) = Complex(z.at(0).get<double>(), z.at(1).get<double>());
        }
      gens.push_back(Generator::from_matrix(labels[i], m));
    }
  } else if (kind == "phase-space" || kind == "phase_space") {
    const auto& coeffs = j.at("coeffs");
    if (coeffs.size() != labels.size()) throw std::invalid_argument("generator JSON: one coefficient vector per label");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto v = coeffs[i].get<std::vector<double>>();
      gens.push_back(Generator::from_coeffs(labels[i], Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
    }
  } else {
    throw std::invalid_argument("generator JSON: unknown kind '" + kind + "'");
  }
  std::optional<int> id;
  if (j.contains("identity_index") && !j["identity_index"].is_null()) id = j["identity_index"].get<int>();
  return GeneratorSet(std::move(gens), id);
}

inline json to_json(const GeneratorSet& gens) {
  json j;
  j["kind"] = to_string(gens.kind());
  j["labels"] = gens.labels();
  if (gens.kind() == GeneratorKind::matrix) {
    json mats = json::array();
    for (const auto& g : gens.generators()) {
      json flat = json::array();
      for (Eigen::Index r = 0; r < g.matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < g.matrix.cols(); ++c) flat.push_back({g.matrix(r, c).real(), g.matrix(r, c).imag()});
      mats.push_back(flat);
    }
    j["matrices"] = mats;
  } else {
    json coeffs = json::array();
    for (const auto& g : gens.generators()) coeffs.push_back(std::vector<double>(g.coeffs.data(), g.coeffs.data() + g.coeffs.size()));
    j["coeffs"] = coeffs;
  }
  j["identity_index"] = gens.identity_index() ? json(*gens.identity_index()) : json(nullptr);
  return j;
}

// Unknown keys are rejected so that typos do not silently fall back to defaults.
inline SolverConfig solver_config_from_json(const json& j, SolverConfig cfg = {}) {
  for (const auto& [key, value] : j.items()) {
    if (key == "n_starts") cfg.n_starts = value.get<int>();
    else if (key == "n_intervals") cfg.n_intervals = value.get<int>();
    else if (key == "tol_endpoint") cfg.tol_endpoint = value.get<double>();
    else if (key == "tol_length") cfg.tol_length = value.get<double>();
    else if (key == "max_iters") cfg.max_iters = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "n_restarts") cfg.n_restarts = value.get<int>();
    else if (key == "shooting_steps") cfg.shooting_steps = value.get<int>();
    else if (key == "cross_check") cfg.cross_check = value.get<bool>();
    else if (key == "stabilizer_scan") cfg.stabilizer_scan = value.get<int>();
    else throw std::invalid_argument("solver config: unknown key '" + key + "'");
  }
  if (cfg.n_starts < 0 || cfg.n_intervals < 1 || cfg.max_iters < 1 || cfg.shooting_steps < 1 ||
      !(cfg.tol_endpoint > 0.0) || !(cfg.tol_length >= 0.0))
    throw std::invalid_argument("solver config: out-of-range value");
  return cfg;
}

inline json to_json(const SolverConfig& c) {
  return {{"n_starts", c.n_starts},       {"n_intervals", c.n_intervals}, {"tol_endpoint", c.tol_endpoint},
          {"tol_length", c.tol_length},   {"max_iters", c.max_iters},     {"seed", c.seed},
          {"n_restarts", c.n_restarts},   {"shooting_steps", c.shooting_steps},
          {"cross_check", c.cross_check}, {"stabilizer_scan", c.stabilizer_scan}};
}

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Path samples are included for plotting; `reference` adds Bloch-vector
// samples of U(sigma) |reference>.
inline json to_json(const GeodesicResult& g, const CVector* reference = nullptr) {
  json j;
  j["length"] = g.length;
  j["labels"] = g.labels;
  j["partials"] = vector_json(g.partials);
  j["endpoint_residual"] = g.endpoint_residual;
  j["converged"] = g.converged;
  j["multiplicity"] = g.multiplicity;
  j["route"] = g.route;
  j["path"] = {{"grid", g.path.grid()}, {"labels", g.path.labels}, {"controls", matrix_json(g.path.controls)}};
  if (g.stabilizer.size() > 0) j["stabilizer"] = vector_json(g.stabilizer);
  if (reference && !g.trajectory.empty()) {
    json samples = json::array();
    for (const auto& u : g.trajectory) {
      const Eigen::Vector3d b = bloch_vector(u * *reference);
      samples.push_back({b(0), b(1), b(2)});
    }
    j["bloch_samples"] = samples;
  }
  return j;
}

inline json to_json(const ResponseMatrix& r) {
  json unreliable = json::array();
  for (Eigen::Index i = 0; i < r.unreliable.rows(); ++i)
    for (Eigen::Index k = 0; k < r.unreliable.cols(); ++k)
      if (r.unreliable(i, k)) unreliable.push_back({i, k});
  return {{"flavor", to_string(r.flavor)}, {"time", r.time},          {"labels", r.labels},
          {"entries", matrix_json(r.entries)}, {"epsilon", r.epsilon_used}, {"unreliable", unreliable}};
}

inline json to_json(const LyapunovEstimate& e) {
  return {{"lambdas", vector_json(e.lambdas)},
          {"window", {e.fit_window.first, e.fit_window.second}},
          {"n_points", e.times.size()},
          {"residual", e.residual}};
}

// CSV with a header row and 15 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format(values[i]);
    out_ << '\n';
  }

  static std::string format(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace chaosgeo
