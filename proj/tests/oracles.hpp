#pragma once

// Reference computations used by the tests. Each is written independently of
// the library code paths it checks (own series exponentials, closed forms,
// finite differences).

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "chaosgeo/linalg.hpp"

namespace oracle {

using chaosgeo::CMatrix;
using chaosgeo::Complex;
using chaosgeo::CVector;
using chaosgeo::Matrix;
using chaosgeo::Vector;

// exp(A) by scaling and squaring with a truncated Taylor series.
template <typename M>
M series_exp(const M& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const M scaled = a / std::pow(2.0, squarings);
  M term = M::Identity(a.rows(), a.cols());
  M sum = term;
  for (int k = 1; k < 30; ++k) {
    term = (term * scaled / static_cast<double>(k)).eval();
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
  return sum;
}

// exp(-i t H) by series.
inline CMatrix unitary(const CMatrix& h, double t = 1.0) { return series_exp<CMatrix>(Complex(0.0, -t) * h); }

inline CMatrix pauli(char c) {
  CMatrix m(2, 2);
  switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1;
  }
  return m;
}

// Pauli coordinates (x, y, z) of a traceless Hermitian 2x2 matrix.
inline Eigen::Vector3d pauli_coords(const CMatrix& h) {
  return {0.5 * (h * pauli('X')).trace().real(), 0.5 * (h * pauli('Y')).trace().real(),
          0.5 * (h * pauli('Z')).trace().real()};
}

// Rotation angle theta of a single-qubit unitary modulo phase: U ~ exp(-i theta n.sigma)
// with theta in [0, pi/2] (the centre {I, -I} is absorbed by the free phase).
inline double qubit_angle(const CMatrix& u) {
  const Complex det = u.determinant();
  const CMatrix su = u / std::sqrt(det);
  const double c = std::clamp(std::abs(su.trace().real()) / 2.0, 0.0, 1.0);
  return std::acos(c);
}

// Inverted / regular oscillator flow matrices in closed form.
inline Matrix iho_flow(double omega, double t) {
  Matrix s(2, 2);
  s << std::cosh(omega * t), std::sinh(omega * t) / omega, omega * std::sinh(omega * t), std::cosh(omega * t);
  return s;
}

inline Matrix harmonic_flow(double omega, double t) {
  Matrix s(2, 2);
  s << std::cos(omega * t), std::sin(omega * t) / omega, -omega * std::sin(omega * t), std::cos(omega * t);
  return s;
}

inline Matrix free_flow(double t) {
  Matrix s(2, 2);
  s << 1.0, t, 0.0, 1.0;
  return s;
}

inline Matrix symplectic(int n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = Matrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return j;
}

// Truncated Fock-space position and momentum (hbar = 1).
inline std::pair<CMatrix, CMatrix> fock_qp(int n) {
  CMatrix a = CMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  const CMatrix q = (a + a.adjoint()) / std::sqrt(2.0);
  const CMatrix p = Complex(0.0, 1.0) * (a.adjoint() - a) / std::sqrt(2.0);
  return {q, p};
}

// Central-difference Jacobian of a map R^n -> R^n.
template <typename F>
Matrix fd_jacobian(F&& f, const Vector& x, double h) {
  const auto n = x.size();
  Matrix j(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    j.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

// Fourth-order Runge-Kutta for the quartic oscillator q' = p, p' = -q^3.
inline Vector quartic_rk4(const Vector& x0, double t, int steps) {
  auto rhs = [](const Vector& x) {
    Vector d(2);
    d << x(1), -x(0) * x(0) * x(0);
    return d;
  };
  Vector x = x0;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Vector k1 = rhs(x), k2 = rhs(x + 0.5 * h * k1), k3 = rhs(x + 0.5 * h * k2), k4 = rhs(x + h * k3);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

inline Eigen::Vector3d random_axis(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline CVector random_state(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n;
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(n(rng), n(rng));
  return v.normalized();
}

}  // namespace oracle
