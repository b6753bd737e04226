#pragma once

// Phase-space Hamiltonians. Coordinates are x = (q_1..q_N, p_1..p_N), hbar = 1.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "chaosgeo/linalg.hpp"

namespace chaosgeo {

// H(x) = x^T A x / 2 with A symmetric.
class QuadraticHamiltonian {
 public:
  explicit QuadraticHamiltonian(Matrix form, std::string name = "quadratic")
      : form_(std::move(form)), name_(std::move(name)) {
    if (form_.rows() != form_.cols() || form_.rows() == 0 || form_.rows() % 2 != 0)
      throw std::invalid_argument("QuadraticHamiltonian: form must be 2N x 2N");
    if (max_abs(form_ - form_.transpose()) > 1e-12)
      throw std::invalid_argument("QuadraticHamiltonian: form must be symmetric");
    if (!form_.allFinite()) throw std::invalid_argument("QuadraticHamiltonian: non-finite form");
  }

  // H = p^2/2 - omega^2 q^2/2
  static QuadraticHamiltonian inverted_oscillator(double omega) {
    Matrix a(2, 2);
    a << -omega * omega, 0.0, 0.0, 1.0;
    return QuadraticHamiltonian(a, "iho");
  }
  // H = p^2/2 + omega^2 q^2/2
  static QuadraticHamiltonian harmonic_oscillator(double omega) {
    Matrix a(2, 2);
    a << omega * omega, 0.0, 0.0, 1.0;
    return QuadraticHamiltonian(a, "harmonic");
  }
  // H = p^2/2
  static QuadraticHamiltonian free_particle() {
    Matrix a(2, 2);
    a << 0.0, 0.0, 0.0, 1.0;
    return QuadraticHamiltonian(a, "free");
  }

  const Matrix& form() const { return form_; }
  const std::string& name() const { return name_; }
  int degrees_of_freedom() const { return static_cast<int>(form_.rows() / 2); }

  double energy(const Vector& x) const { return 0.5 * x.dot(form_ * x); }

  // Generator of the linear flow, dx/dt = K x with K = J A.
  Matrix flow_generator() const { return symplectic_form(degrees_of_freedom()) * form_; }

  // S(t) = exp(t J A); x(t) = S(t) x(0).
  Matrix flow_matrix(double t) const {
    if (t == 0.0) return Matrix::Identity(form_.rows(), form_.cols());
    Matrix k = t * flow_generator();
    return k.exp();
  }

  // True when H has no q-p cross terms, i.e. H = T(p) + V(q).
  bool is_separable() const {
    const int n = degrees_of_freedom();
    return max_abs(form_.topRightCorner(n, n)) == 0.0;
  }

 private:
  Matrix form_;
  std::string name_;
};

// H(q, p) = T(p) + V(q) with user-supplied gradients and Hessians.
struct SeparableHamiltonian {
  int n = 1;
  std::string name = "separable";
  std::function<double(const Vector&)> kinetic;
  std::function<double(const Vector&)> potential;
  std::function<Vector(const Vector&)> kinetic_gradient;
  std::function<Vector(const Vector&)> potential_gradient;
  std::function<Matrix(const Vector&)> kinetic_hessian;
  std::function<Matrix(const Vector&)> potential_hessian;

  double energy(const Vector& x) const { return kinetic(x.tail(n)) + potential(x.head(n)); }

  // H = p^2/2 + sum_k coeffs[k] q^k for one degree of freedom.
  static SeparableHamiltonian polynomial(std::vector<double> coeffs, std::string name = "polynomial") {
    SeparableHamiltonian h;
    h.n = 1;
    h.name = std::move(name);
    auto c = std::make_shared<const std::vector<double>>(std::move(coeffs));
    h.kinetic = [](const Vector& p) { return 0.5 * p.squaredNorm(); };
    h.kinetic_gradient = [](const Vector& p) { return p; };
    h.kinetic_hessian = [](const Vector& p) { return Matrix::Identity(p.size(), p.size()); };
    h.potential = [c](const Vector& q) {
      double v = 0.0, pw = 1.0;
      for (double ck : *c) { v += ck * pw; pw *= q(0); }
      return v;
    };
    h.potential_gradient = [c](const Vector& q) {
      double g = 0.0, pw = 1.0;
      for (std::size_t k = 1; k < c->size(); ++k) { g += static_cast<double>(k) * (*c)[k] * pw; pw *= q(0); }
      return Vector::Constant(1, g);
    };
    h.potential_hessian = [c](const Vector& q) {
      double g = 0.0, pw = 1.0;
      for (std::size_t k = 2; k < c->size(); ++k) {
        g += static_cast<double>(k * (k - 1)) * (*c)[k] * pw;
        pw *= q(0);
      }
      return Matrix::Constant(1, 1, g);
    };
    return h;
  }

  // H = p^2/2 + q^4/4
  static SeparableHamiltonian quartic() { return polynomial({0.0, 0.0, 0.0, 0.0, 0.25}, "quartic"); }

  // Separable view of a quadratic form without q-p cross terms.
  static SeparableHamiltonian from_quadratic(const QuadraticHamiltonian& h) {
    if (!h.is_separable()) throw std::invalid_argument("from_quadratic: form has q-p cross terms");
    const int n = h.degrees_of_freedom();
    const Matrix vq = h.form().topLeftCorner(n, n);
    const Matrix tp = h.form().bottomRightCorner(n, n);
    SeparableHamiltonian s;
    s.n = n;
    s.name = h.name();
    s.kinetic = [tp](const Vector& p) { return 0.5 * p.dot(tp * p); };
    s.potential = [vq](const Vector& q) { return 0.5 * q.dot(vq * q); };
    s.kinetic_gradient = [tp](const Vector& p) -> Vector { return tp * p; };
    s.potential_gradient = [vq](const Vector& q) -> Vector { return vq * q; };
    s.kinetic_hessian = [tp](const Vector&) { return tp; };
    s.potential_hessian = [vq](const Vector&) { return vq; };
    return s;
  }
};

using HamiltonianFunction = std::variant<QuadraticHamiltonian, SeparableHamiltonian>;

inline int degrees_of_freedom(const HamiltonianFunction& h) {
  return std::visit([](const auto& v) {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, QuadraticHamiltonian>)
      return v.degrees_of_freedom();
    else
      return v.n;
  }, h);
}

inline double energy(const HamiltonianFunction& h, const Vector& x) {
  return std::visit([&](const auto& v) { return v.energy(x); }, h);
}

inline const QuadraticHamiltonian& require_quadratic(const HamiltonianFunction& h) {
  if (const auto* q = std::get_if<QuadraticHamiltonian>(&h)) return *q;
  throw std::invalid_argument("operation requires a quadratic Hamiltonian");
}

// Named presets used by the experiment runner.
inline HamiltonianFunction make_hamiltonian(const std::string& name, double omega,
                                            const std::vector<double>& coeffs = {}) {
  if (name == "iho") return QuadraticHamiltonian::inverted_oscillator(omega);
  if (name == "harmonic") return QuadraticHamiltonian::harmonic_oscillator(omega);
  if (name == "free") return QuadraticHamiltonian::free_particle();
  if (name == "quartic") return SeparableHamiltonian::quartic();
  if (name == "custom-polynomial" || name == "polynomial") {
    if (coeffs.empty()) throw std::invalid_argument("custom-polynomial needs coefficients");
    return SeparableHamiltonian::polynomial(coeffs, "custom-polynomial");
  }
  throw std::invalid_argument("unknown Hamiltonian '" + name + "'");
}

}  // namespace chaosgeo
