#pragma once

// Classical phase-space dynamics: trajectories, tangent maps, Benettin
// Lyapunov spectra, Gaussian Wigner functions under Liouville flow, and the
// closed-form inverted-oscillator results used as oracles.

#include <algorithm>
#include <cmath>
#include <vector>

#include "chaosgeo/generators.hpp"
#include "chaosgeo/hamiltonian.hpp"
#include "chaosgeo/response_types.hpp"

namespace chaosgeo {

struct IntegratorConfig {
  double step = 1e-3;          // symplectic / RK4 step for non-exact flows
  int n_samples = 2;           // trajectory samples on [0, t], endpoints included
  double energy_tol = 1e-6;    // relative energy drift allowed for nonlinear runs
  double min_step = 1e-12;
};

struct PhaseSpaceFlow {
  Vector x0;
  std::vector<double> times;
  std::vector<Vector> trajectory;
  std::vector<Matrix> jacobians;  // d x_t / d x_0 at each sample

  const Vector& final_point() const { return trajectory.back(); }
  const Matrix& final_jacobian() const { return jacobians.back(); }
};

namespace detail {

// Fourth-order Forest-Ruth composition for H = T(p) + V(q), propagating the
// tangent map m alongside the state (exact derivative of the discrete map,
// hence symplectic to rounding).
inline void forest_ruth_step(const SeparableHamiltonian& h, Vector& x, Matrix& m, double dt) {
  static const double theta = 1.0 / (2.0 - std::cbrt(2.0));
  const int n = h.n;
  auto drift = [&](double c) {
    const Vector p = x.tail(n);
    x.head(n) += c * dt * h.kinetic_gradient(p);
    m.topRows(n) += c * dt * h.kinetic_hessian(p) * m.bottomRows(n);
  };
  auto kick = [&](double c) {
    const Vector q = x.head(n);
    x.tail(n) -= c * dt * h.potential_gradient(q);
    m.bottomRows(n) -= c * dt * h.potential_hessian(q) * m.topRows(n);
  };
  drift(0.5 * theta);
  kick(theta);
  drift(0.5 * (1.0 - theta));
  kick(1.0 - 2.0 * theta);
  drift(0.5 * (1.0 - theta));
  kick(theta);
  drift(0.5 * theta);
}

// Advances (x, m) by dt with the integrator appropriate for h.
inline void advance(const HamiltonianFunction& hf, Vector& x, Matrix& m, double dt, const IntegratorConfig& cfg) {
  if (dt == 0.0) return;
  if (!(cfg.step > cfg.min_step) || !std::isfinite(cfg.step))
    throw IntegrationError("integrator step underflow");
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(dt) / cfg.step - 1e-9)));
  const double h = dt / steps;
  if (std::abs(h) < cfg.min_step) throw IntegrationError("integrator step underflow");
  if (const auto* sep = std::get_if<SeparableHamiltonian>(&hf)) {
    for (int s = 0; s < steps; ++s) forest_ruth_step(*sep, x, m, h);
  } else {
    const auto& q = std::get<QuadraticHamiltonian>(hf);
    if (q.is_separable()) {
      const auto sep2 = SeparableHamiltonian::from_quadratic(q);
      for (int s = 0; s < steps; ++s) forest_ruth_step(sep2, x, m, h);
    } else {
      // Linear system: classic RK4 on the augmented state [x | m].
      const Matrix k = q.flow_generator();
      Matrix y(x.size(), m.cols() + 1);
      y << x, m;
      for (int s = 0; s < steps; ++s) {
        const Matrix k1 = k * y;
        const Matrix k2 = k * (y + 0.5 * h * k1);
        const Matrix k3 = k * (y + 0.5 * h * k2);
        const Matrix k4 = k * (y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      x = y.col(0);
      m = y.rightCols(m.cols());
    }
  }
  if (!x.allFinite() || !m.allFinite()) throw IntegrationError("trajectory left the finite range");
}

inline std::vector<double> sample_times(double t, int n_samples) {
  const int n = std::max(2, n_samples);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = t * static_cast<double>(i) / (n - 1);
  return out;
}

}  // namespace detail

// Trajectory x_t(x0) with tangent maps. Quadratic H is propagated exactly
// through S(t); other Hamiltonians use the fourth-order symplectic integrator.
inline PhaseSpaceFlow evolve_flow(const HamiltonianFunction& h, const Vector& x0, double t,
                                  const IntegratorConfig& cfg = {}) {
  const int dof = degrees_of_freedom(h);
  if (x0.size() != 2 * dof) throw std::invalid_argument("evolve_flow: x0 has wrong dimension");
  PhaseSpaceFlow flow;
  flow.x0 = x0;
  flow.times = detail::sample_times(t, cfg.n_samples);
  if (const auto* q = std::get_if<QuadraticHamiltonian>(&h)) {
    for (double tau : flow.times) {
      const Matrix s = q->flow_matrix(tau);
      flow.trajectory.push_back(s * x0);
      flow.jacobians.push_back(s);
    }
    return flow;
  }
  Vector x = x0;
  Matrix m = Matrix::Identity(2 * dof, 2 * dof);
  const double e0 = energy(h, x0);
  double prev = 0.0;
  for (double tau : flow.times) {
    detail::advance(h, x, m, tau - prev, cfg);
    prev = tau;
    flow.trajectory.push_back(x);
    flow.jacobians.push_back(m);
  }
  const double drift = std::abs(energy(h, x) - e0);
  if (!(drift <= cfg.energy_tol * std::max(1.0, std::abs(e0))))
    throw IntegrationError("energy drift " + std::to_string(drift) + " exceeds tolerance");
  return flow;
}

// d x_t / d x_0 at x0 from the variational equations, integrated alongside
// the trajectory (never through the closed-form S(t)). Negative t runs the
// flow backwards.
inline Matrix jacobian_matrix(const HamiltonianFunction& h, const Vector& x0, double t,
                              const IntegratorConfig& cfg = {}) {
  const int dof = degrees_of_freedom(h);
  if (x0.size() != 2 * dof) throw std::invalid_argument("jacobian_matrix: x0 has wrong dimension");
  Vector x = x0;
  Matrix m = Matrix::Identity(2 * dof, 2 * dof);
  detail::advance(h, x, m, t, cfg);
  return m;
}

// Final state only, via the same integrator as jacobian_matrix (used for
// finite-difference cross-checks).
inline Vector integrate_point(const HamiltonianFunction& h, const Vector& x0, double t,
                              const IntegratorConfig& cfg = {}) {
  Vector x = x0;
  Matrix m = Matrix::Identity(x0.size(), x0.size());
  detail::advance(h, x, m, t, cfg);
  return x;
}

struct QRConfig {
  double reortho_interval = 0.1;  // time between QR re-orthonormalizations
  double step = 1e-3;             // integrator step for nonlinear flows
  double transient = 0.0;         // initial time excluded from the average
};

// Benettin tangent-space algorithm: evolve an orthonormal frame, re-orthonormalize
// by QR every interval and average log|R_ii|.
inline LyapunovEstimate classical_lyapunov(const HamiltonianFunction& h, const Vector& x0, double total_time,
                                           const QRConfig& cfg = {}) {
  const int dim = 2 * degrees_of_freedom(h);
  if (x0.size() != dim) throw std::invalid_argument("classical_lyapunov: x0 has wrong dimension");
  if (!(cfg.reortho_interval > 0.0)) throw std::invalid_argument("classical_lyapunov: bad interval");
  const int n_steps = static_cast<int>(std::floor(total_time / cfg.reortho_interval + 1e-9));
  const int n_transient = static_cast<int>(std::floor(cfg.transient / cfg.reortho_interval + 1e-9));
  if (n_steps - n_transient < 50)
    throw std::invalid_argument("classical_lyapunov: need at least 50 QR steps after the transient");

  IntegratorConfig icfg;
  icfg.step = cfg.step;
  const double dt = cfg.reortho_interval;
  const auto* quad = std::get_if<QuadraticHamiltonian>(&h);
  const Matrix s_step = quad ? quad->flow_matrix(dt) : Matrix();

  Vector x = x0;
  Matrix frame = Matrix::Identity(dim, dim);
  Vector log_sum = Vector::Zero(dim);
  std::vector<Vector> running;
  LyapunovEstimate est;
  for (int k = 1; k <= n_steps; ++k) {
    if (quad) {
      x = s_step * x;
      frame = s_step * frame;
    } else {
      detail::advance(h, x, frame, dt, icfg);
    }
    Eigen::HouseholderQR<Matrix> qr(frame);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    Matrix q = qr.householderQ();
    // Fix signs so that diag(R) > 0.
    for (int i = 0; i < dim; ++i) {
      if (r(i, i) < 0.0) q.col(i) *= -1.0;
    }
    frame = q;
    if (k > n_transient) {
      for (int i = 0; i < dim; ++i) log_sum(i) += std::log(std::abs(r(i, i)));
      const double elapsed = (k - n_transient) * dt;
      running.push_back(log_sum / elapsed);
      est.times.push_back(k * dt);
    }
  }
  est.lambdas = running.back();
  std::sort(est.lambdas.data(), est.lambdas.data() + est.lambdas.size(), std::greater<>());
  est.fit_window = {n_transient * dt, n_steps * dt};
  // Convergence indicator: change of the running average over the second half.
  Vector half = running[running.size() / 2];
  std::sort(half.data(), half.data() + half.size(), std::greater<>());
  est.residual = max_abs(est.lambdas - half);
  return est;
}

// Gaussian Wigner function with mean and (symmetrized) covariance.
struct GaussianWignerState {
  Vector mean;
  Matrix covariance;

  GaussianWignerState() = default;
  GaussianWignerState(Vector m, Matrix c) : mean(std::move(m)), covariance(std::move(c)) { validate(); }

  static GaussianWignerState vacuum(int n, const Vector& mean = {}) {
    Vector m = mean.size() == 0 ? Vector::Zero(2 * n) : mean;
    return {m, 0.5 * Matrix::Identity(2 * n, 2 * n)};
  }

  int degrees_of_freedom() const { return static_cast<int>(mean.size() / 2); }

  void validate() const {
    const auto d = mean.size();
    if (d == 0 || d % 2 != 0 || covariance.rows() != d || covariance.cols() != d)
      throw std::invalid_argument("GaussianWignerState: dimension mismatch");
    if (max_abs(covariance - covariance.transpose()) > 1e-12 * std::max(1.0, max_abs(covariance)))
      throw std::invalid_argument("GaussianWignerState: covariance not symmetric");
    Eigen::LLT<Matrix> llt(covariance);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("GaussianWignerState: covariance not SPD");
    const double bound = std::pow(0.5, static_cast<double>(d));
    if (covariance.determinant() < bound - 1e-12)
      throw std::invalid_argument("GaussianWignerState: violates the uncertainty bound");
  }

  // Same covariance, mean shifted by delta.
  GaussianWignerState shifted(const Vector& delta) const { return {mean + delta, covariance}; }

  // <A^dag B> for linear operators A = alpha.x + alpha0, B = beta.x + beta0,
  // using <x_i x_j> = cov_ij + m_i m_j + (i/2) J_ij.
  Complex expect_product(const CVector& alpha, Complex alpha0, const CVector& beta, Complex beta0) const {
    const int n = degrees_of_freedom();
    const CMatrix second = (covariance + mean * mean.transpose()).cast<Complex>() +
                           Complex(0.0, 0.5) * symplectic_form(n).cast<Complex>();
    const CVector m = mean.cast<Complex>();
    return alpha.dot(second * beta) + alpha.dot(m) * beta0 + std::conj(alpha0) * m.dot(beta) +
           std::conj(alpha0) * beta0;
  }
};

// Liouville transport of a Gaussian under quadratic H (exact).
inline GaussianWignerState evolve_wigner_gaussian(const GaussianWignerState& w, const QuadraticHamiltonian& h,
                                                  double t) {
  if (w.degrees_of_freedom() != h.degrees_of_freedom())
    throw std::invalid_argument("evolve_wigner_gaussian: dimension mismatch");
  const Matrix s = h.flow_matrix(t);
  Matrix cov = s * w.covariance * s.transpose();
  cov = 0.5 * (cov + cov.transpose());
  GaussianWignerState out;
  out.mean = s * w.mean;
  out.covariance = cov;
  return out;
}

inline GaussianWignerState evolve_wigner_gaussian(const GaussianWignerState& w, const HamiltonianFunction& h,
                                                  double t) {
  return evolve_wigner_gaussian(w, require_quadratic(h), t);
}

// Closed-form response of H = p^2/2 - omega^2 x^2/2:
// [[cosh, omega sinh], [sinh/omega, cosh]] (rows x, p).
inline ResponseMatrix iho_response_analytic(double omega, double t) {
  if (!(omega > 0.0)) throw std::invalid_argument("iho_response_analytic: omega must be positive");
  const double c = std::cosh(omega * t);
  const double s = std::sinh(omega * t);
  ResponseMatrix r;
  r.flavor = ResponseFlavor::unitary;
  r.entries.resize(2, 2);
  r.entries << c, omega * s, s / omega, c;
  r.time = t;
  r.labels = {"x", "p"};
  r.unreliable = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(2, 2, false);
  return r;
}

// (eps1, eps2) -> (eps1 cosh + eps2 sinh/omega, eps1 omega sinh + eps2 cosh).
inline DisplacementVector iho_displacement_analytic(double eps1, double eps2, double omega, double t) {
  if (!(omega > 0.0)) throw std::invalid_argument("iho_displacement_analytic: omega must be positive");
  const double c = std::cosh(omega * t);
  const double s = std::sinh(omega * t);
  return {Vector::Constant(1, eps1 * c + eps2 * s / omega), Vector::Constant(1, eps1 * omega * s + eps2 * c), 0.0};
}

}  // namespace chaosgeo
