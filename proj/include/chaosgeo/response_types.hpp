#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chaosgeo/linalg.hpp"

namespace chaosgeo {

enum class ResponseFlavor { state, unitary };

inline const char* to_string(ResponseFlavor f) { return f == ResponseFlavor::state ? "state" : "unitary"; }

// R_{KL}: row K = perturbing generator, column L = measured partial complexity.
struct ResponseMatrix {
  ResponseFlavor flavor = ResponseFlavor::unitary;
  Matrix entries;
  double time = 0.0;
  std::vector<std::string> labels;
  double epsilon_used = 0.0;
  // Entries whose Richardson pair disagreed or whose geodesic branch changed
  // across the stencil.
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> unreliable;

  bool all_reliable() const { return unreliable.size() == 0 || !unreliable.any(); }
};

struct ResponseSpectrum {
  Matrix L_matrix;     // R^T R
  Vector eigenvalues;  // descending
  double time = 0.0;
};

struct LyapunovEstimate {
  Vector lambdas;  // descending
  std::vector<double> times;
  std::pair<double, double> fit_window{0.0, 0.0};
  double residual = 0.0;
};

}  // namespace chaosgeo
