#pragma once

// Complexity linear response. Row K of R is the perturbing generator, column
// L the measured partial complexity; the identity generator is excluded from
// both.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "chaosgeo/classical.hpp"
#include "chaosgeo/geometry.hpp"
#include "chaosgeo/response_types.hpp"

namespace chaosgeo {

struct DiffConfig {
  double epsilon = 1e-5;
  bool richardson = true;
  // Entries whose eps and eps/2 estimates differ by more than this (relative
  // to max(1, |entry|)) are flagged as unreliable.
  double reliability_tol = 1e-5;
  std::optional<CostWeights> weights;  // isotropic when unset
  SolverConfig solver = response_solver();

  // Stencil targets sit close to the identity, where the principal-log start
  // already lands on the minimizing geodesic; a few extra starts guard
  // anisotropic weights.
  static SolverConfig response_solver() {
    SolverConfig s;
    s.n_starts = 6;
    s.tol_endpoint = 1e-12;
    s.n_intervals = 16;
    return s;
  }
};

namespace detail {

inline CostWeights weights_or_default(const DiffConfig& cfg, const GeneratorSet& gens) {
  return cfg.weights ? *cfg.weights : CostWeights::isotropic(gens);
}

struct StencilValue {
  Vector partials;  // active generators only
  int multiplicity = 1;
};

// Central difference with optional Richardson step over rows K; probe(K, eps)
// returns the active partials at perturbation strength eps.
inline ResponseMatrix central_difference(const GeneratorSet& gens, double t, const DiffConfig& cfg,
                                         ResponseFlavor flavor,
                                         const std::function<StencilValue(std::size_t, double)>& probe) {
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("DiffConfig: epsilon must be positive");
  const auto active = gens.active_indices();
  const auto m = static_cast<Eigen::Index>(active.size());
  ResponseMatrix r;
  r.flavor = flavor;
  r.time = t;
  r.labels = gens.active_labels();
  r.epsilon_used = cfg.epsilon;
  r.entries.resize(m, m);
  r.unreliable = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, m, false);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double e = cfg.epsilon;
    const StencilValue plus = probe(active[k], e);
    const StencilValue minus = probe(active[k], -e);
    const Vector d1 = (plus.partials - minus.partials) / (2.0 * e);
    bool branch_changed = plus.multiplicity != minus.multiplicity;
    Vector row = d1;
    if (cfg.richardson) {
      const StencilValue hplus = probe(active[k], 0.5 * e);
      const StencilValue hminus = probe(active[k], -0.5 * e);
      const Vector d2 = (hplus.partials - hminus.partials) / e;
      row = (4.0 * d2 - d1) / 3.0;
      branch_changed = branch_changed || hplus.multiplicity != plus.multiplicity ||
                       hminus.multiplicity != plus.multiplicity;
      for (Eigen::Index l = 0; l < m; ++l)
        r.unreliable(k, l) = std::abs(d2(l) - d1(l)) > cfg.reliability_tol * std::max(1.0, std::abs(row(l)));
    }
    if (branch_changed) r.unreliable.row(k).setConstant(true);
    r.entries.row(k) = row.transpose();
  }
  if (!r.entries.allFinite()) throw ConvergenceError("response matrix has non-finite entries");
  return r;
}

inline Vector active_part(const Vector& partials, const GeneratorSet& gens) {
  const auto active = gens.active_indices();
  Vector out(static_cast<Eigen::Index>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) out(static_cast<Eigen::Index>(i)) = partials(active[i]);
  return out;
}

inline void require_converged(const GeodesicResult& g) {
  if (!g.converged)
    throw ConvergenceError("geodesic solver did not converge at a stencil point (residual " +
                           std::to_string(g.endpoint_residual) + ")");
}

}  // namespace detail

// Phase-space pipeline: U_eps = e^{-iHt} e^{i eps M_K} e^{iHt} is transported
// exactly in displacement coordinates and measured by the straight-line
// Heisenberg geodesic.
inline ResponseMatrix unitary_response_matrix(const HamiltonianFunction& h, const GeneratorSet& gens, double t,
                                              const DiffConfig& cfg = {}) {
  if (gens.kind() != GeneratorKind::phase_space)
    throw std::invalid_argument("unitary_response_matrix: phase-space Hamiltonian needs phase-space generators");
  const QuadraticHamiltonian& q = require_quadratic(h);
  if (q.degrees_of_freedom() != gens.degrees_of_freedom())
    throw std::invalid_argument("unitary_response_matrix: dimension mismatch");
  const CostWeights w = detail::weights_or_default(cfg, gens);
  const Matrix s = q.flow_matrix(t);
  auto probe = [&](std::size_t k, double eps) {
    const DisplacementVector d = DisplacementVector::from_generator(gens[k], eps);
    const DisplacementVector dt = DisplacementVector::from_linear(s * d.linear(), d.phase);
    return detail::StencilValue{detail::active_part(heisenberg_complexity(dt, gens, w).partials, gens), 1};
  };
  return detail::central_difference(gens, t, cfg, ResponseFlavor::unitary, probe);
}

// Matrix pipeline: the perturbation is the protocol exp(-i eps M_K), so that
// R(0) is the identity, transported by e^{-iHt} ( . ) e^{iHt}.
inline ResponseMatrix unitary_response_matrix(const CMatrix& h, const GeneratorSet& gens, double t,
                                              const DiffConfig& cfg = {}) {
  if (gens.kind() != GeneratorKind::matrix)
    throw std::invalid_argument("unitary_response_matrix: matrix Hamiltonian needs matrix generators");
  if (h.rows() != gens.dim() || !is_hermitian(h, 1e-10))
    throw std::invalid_argument("unitary_response_matrix: Hamiltonian must be Hermitian of the generator dimension");
  const CostWeights w = detail::weights_or_default(cfg, gens);
  const CMatrix ut = hermitian_exp(h, t);
  auto probe = [&](std::size_t k, double eps) {
    const CMatrix target = ut * hermitian_exp(gens[k].matrix, eps) * ut.adjoint();
    const GeodesicResult g = unitary_complexity(target, gens, w, cfg.solver);
    detail::require_converged(g);
    return detail::StencilValue{detail::active_part(g.partials, gens), g.multiplicity};
  };
  return detail::central_difference(gens, t, cfg, ResponseFlavor::unitary, probe);
}

// Gaussian pipeline: both states keep the same covariance; their relative
// displacement d(t) = S(t) delta is linear in eps, so the derivative is exact.
// The perturbation by a.q + b.p is identified with the phase-space shift
// delta = eps (a, b), which makes R^s_{ki} = d x_t^i / d x^k.
inline ResponseMatrix state_response_matrix(const GaussianWignerState& psi0, const HamiltonianFunction& h,
                                            const GeneratorSet& gens, double t, const DiffConfig& cfg = {}) {
  if (gens.kind() != GeneratorKind::phase_space)
    throw std::invalid_argument("state_response_matrix: Gaussian states need phase-space generators");
  psi0.validate();
  const QuadraticHamiltonian& q = require_quadratic(h);
  if (psi0.degrees_of_freedom() != gens.degrees_of_freedom() || q.degrees_of_freedom() != gens.degrees_of_freedom())
    throw std::invalid_argument("state_response_matrix: dimension mismatch");
  const CostWeights w = detail::weights_or_default(cfg, gens);
  const auto active = gens.active_indices();
  const auto m = static_cast<Eigen::Index>(active.size());
  const GaussianWignerState w1 = evolve_wigner_gaussian(psi0, q, t);
  ResponseMatrix r;
  r.flavor = ResponseFlavor::state;
  r.time = t;
  r.labels = gens.active_labels();
  r.epsilon_used = 0.0;
  r.entries.resize(m, m);
  r.unreliable = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, m, false);
  for (Eigen::Index k = 0; k < m; ++k) {
    const GaussianWignerState w2 = evolve_wigner_gaussian(psi0.shifted(gens[active[k]].linear_part()), q, t);
    const DisplacementVector d = DisplacementVector::from_linear(w2.mean - w1.mean);
    r.entries.row(k) = detail::active_part(heisenberg_complexity(d, gens, w).partials, gens).transpose();
  }
  return r;
}

// Matrix pipeline: psi_1 = e^{-iHt} psi, psi_2 = e^{-iHt} e^{-i eps M_K} psi,
// partials of the state-complexity geodesic from psi_1 to psi_2.
inline ResponseMatrix state_response_matrix(const CVector& psi0, const CMatrix& h, const GeneratorSet& gens,
                                            double t, const DiffConfig& cfg = {}) {
  if (gens.kind() != GeneratorKind::matrix)
    throw std::invalid_argument("state_response_matrix: state vectors need matrix generators");
  if (h.rows() != gens.dim() || psi0.size() != gens.dim() || !is_hermitian(h, 1e-10))
    throw std::invalid_argument("state_response_matrix: dimension mismatch or non-Hermitian H");
  const CostWeights w = detail::weights_or_default(cfg, gens);
  const CMatrix ut = hermitian_exp(h, t);
  const CVector psi1 = ut * psi0.normalized();
  auto probe = [&](std::size_t k, double eps) {
    const CVector psi2 = ut * hermitian_exp(gens[k].matrix, eps) * psi0.normalized();
    const GeodesicResult g = state_complexity(psi1, psi2, gens, w, cfg.solver);
    detail::require_converged(g);
    return detail::StencilValue{detail::active_part(g.partials, gens), g.multiplicity};
  };
  return detail::central_difference(gens, t, cfg, ResponseFlavor::state, probe);
}

// L = R^T R; eigenvalues from the squared singular values of R, which keeps
// the small branch accurate when the spectrum spans many decades.
inline ResponseSpectrum response_spectrum(const ResponseMatrix& r) {
  if (r.entries.rows() != r.entries.cols()) throw std::invalid_argument("response_spectrum: R must be square");
  ResponseSpectrum out;
  out.time = r.time;
  out.L_matrix = r.entries.transpose() * r.entries;
  out.L_matrix = 0.5 * (out.L_matrix + out.L_matrix.transpose()).eval();
  Eigen::JacobiSVD<Matrix> svd(r.entries);
  out.eigenvalues = svd.singularValues().array().square();
  std::sort(out.eigenvalues.data(), out.eigenvalues.data() + out.eigenvalues.size(), std::greater<>());
  return out;
}

// Least-squares slope of ln(s_i)/2 against t per descending branch.
inline LyapunovEstimate lyapunov_spectrum(const std::vector<ResponseSpectrum>& spectra,
                                          std::pair<double, double> window) {
  if (!(window.second > window.first)) throw std::invalid_argument("lyapunov_spectrum: empty window");
  std::vector<const ResponseSpectrum*> used;
  for (const auto& s : spectra)
    if (s.time >= window.first - 1e-12 && s.time <= window.second + 1e-12) used.push_back(&s);
  if (used.size() < 5) throw std::invalid_argument("lyapunov_spectrum: fewer than 5 time points in the window");
  const auto n = used.front()->eigenvalues.size();
  const auto count = static_cast<Eigen::Index>(used.size());
  Vector t(count);
  Matrix y(count, n);
  for (Eigen::Index j = 0; j < count; ++j) {
    const auto& s = *used[j];
    if (s.eigenvalues.size() != n) throw std::invalid_argument("lyapunov_spectrum: inconsistent spectrum sizes");
    if ((s.eigenvalues.array() <= 0.0).any())
      throw std::invalid_argument("lyapunov_spectrum: non-positive eigenvalue at t = " + std::to_string(s.time));
    t(j) = s.time;
    y.row(j) = 0.5 * s.eigenvalues.array().log().transpose();
  }
  const double tm = t.mean();
  const Vector dt = t.array() - tm;
  const double sxx = dt.squaredNorm();
  LyapunovEstimate est;
  est.lambdas.resize(n);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ym = y.col(i).mean();
    const double slope = dt.dot(y.col(i).array().matrix() - Vector::Constant(count, ym)) / sxx;
    est.lambdas(i) = slope;
    const Vector fit = Vector::Constant(count, ym) + slope * dt;
    ss += (y.col(i) - fit).squaredNorm();
  }
  est.residual = std::sqrt(ss / static_cast<double>(count * n));
  std::sort(est.lambdas.data(), est.lambdas.data() + n, std::greater<>());
  est.times.assign(t.data(), t.data() + count);
  est.fit_window = window;
  return est;
}

}  // namespace chaosgeo
