#pragma once

// Dense linear-algebra helpers shared by every module: matrix aliases,
// error types, exponentials/logarithms of unitaries and the symplectic form.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace chaosgeo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

// Iterative solver gave up (Newton, LM, stencil evaluation).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Phase-space integration failed (step underflow, energy drift).
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-12) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

// Standard symplectic form for x = (q_1..q_N, p_1..p_N): [[0, I], [-I, 0]].
// With H(x) = x^T A x / 2 the flow is dx/dt = J A x.
inline Matrix symplectic_form(int n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = Matrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return j;
}

namespace detail {

// exp(-i t H) for a 2x2 Hermitian H via H = h0 I + h.sigma.
inline CMatrix qubit_exp(const CMatrix& h, double t) {
  const double h0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double hz = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const double hx = 0.5 * (h(0, 1).real() + h(1, 0).real());
  const double hy = 0.5 * (h(1, 0).imag() - h(0, 1).imag());
  const double r = std::sqrt(hx * hx + hy * hy + hz * hz);
  const double c = std::cos(r * t);
  const double s = r > 0.0 ? std::sin(r * t) / r : t;
  CMatrix u(2, 2);
  // cos(rt) I - i sin(rt) (h.sigma)/r
  u(0, 0) = Complex(c, -s * hz);
  u(1, 1) = Complex(c, s * hz);
  u(0, 1) = Complex(-s * hy, -s * hx);
  u(1, 0) = Complex(s * hy, -s * hx);
  return u * std::exp(Complex(0.0, -h0 * t));
}

}  // namespace detail

// exp(-i t H) for Hermitian H. Exactly unitary up to rounding.
inline CMatrix hermitian_exp(const CMatrix& h, double t = 1.0) {
  if (h.rows() == 2) return detail::qubit_exp(h, t);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector phases = (es.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Principal logarithm of a unitary in the form U = exp(-i K), K Hermitian
// with eigenvalues in [-pi, pi).
inline CMatrix hermitian_log(const CMatrix& u) {
  const auto n = u.rows();
  if (n == 2) {
    // U = e^{i a} (cos r I - i sin r n.sigma) for unitary U.
    const Complex det = u.determinant();
    const double a = 0.5 * std::arg(det);
    const CMatrix v = u * std::exp(Complex(0.0, -a));
    const double c = 0.5 * (v(0, 0) + v(1, 1)).real();
    const double nz = -0.5 * (v(0, 0) - v(1, 1)).imag();
    const double nx = -0.5 * (v(0, 1) + v(1, 0)).imag();
    const double ny = 0.5 * (v(1, 0) - v(0, 1)).real();
    const double s = std::sqrt(nx * nx + ny * ny + nz * nz);
    const double r = std::atan2(s, c);
    const double f = s > 1e-300 ? r / s : 1.0;
    CMatrix k(2, 2);
    k(0, 0) = Complex(f * nz - a, 0.0);
    k(1, 1) = Complex(-f * nz - a, 0.0);
    k(0, 1) = Complex(f * nx, -f * ny);
    k(1, 0) = Complex(f * nx, f * ny);
    // Eigenvalues are -a +- r; outside [-pi, pi) fall through to Schur.
    if (r - a < kPi && -r - a >= -kPi) return k;
  }
  Eigen::ComplexSchur<CMatrix> schur(u);
  const CMatrix& q = schur.matrixU();
  const CMatrix& t = schur.matrixT();
  CVector kappa(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double phi = -std::arg(t(i, i));
    if (phi >= kPi) phi -= 2.0 * kPi;
    kappa(i) = phi;
  }
  CMatrix k = q * kappa.asDiagonal() * q.adjoint();
  return 0.5 * (k + k.adjoint());
}

// Multiplies w by the unit phase that makes tr(w) real and non-negative.
inline CMatrix strip_phase(const CMatrix& w) {
  const Complex tr = w.trace();
  if (std::abs(tr) < 1e-300) return w;
  return w * std::conj(tr / std::abs(tr));
}

// Projective distance 1 - |tr(U^dag V)| / n; zero iff U = e^{i a} V.
inline double projective_distance(const CMatrix& u, const CMatrix& v) {
  const double n = static_cast<double>(u.rows());
  return std::max(0.0, 1.0 - std::abs((u.adjoint() * v).trace()) / n);
}

inline CMatrix pauli(char which) {
  CMatrix m = CMatrix::Zero(2, 2);
  switch (which) {
    case 'I': m(0, 0) = 1.0; m(1, 1) = 1.0; break;
    case 'X': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 'Y': m(0, 1) = -kI; m(1, 0) = kI; break;
    case 'Z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: throw std::invalid_argument(std::string("unknown Pauli '") + which + "'");
  }
  return m;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Bloch vector of a normalized qubit state.
inline Eigen::Vector3d bloch_vector(const CVector& psi) {
  if (psi.size() != 2) throw std::invalid_argument("bloch_vector: state must be a qubit");
  const Complex rho01 = psi(0) * std::conj(psi(1));
  return {2.0 * rho01.real(), -2.0 * rho01.imag(), std::norm(psi(0)) - std::norm(psi(1))};
}

}  // namespace chaosgeo
