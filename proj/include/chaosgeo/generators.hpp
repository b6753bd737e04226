#pragma once

// Generator sets {M_I}: explicit Hermitian matrices (Pauli strings) or
// Heisenberg-algebra elements a.q + b.p + c*identity stored by coefficients.
// Heisenberg-group elements are handled exactly in (a, b, phase) coordinates.

#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "chaosgeo/hamiltonian.hpp"
#include "chaosgeo/linalg.hpp"

namespace chaosgeo {

enum class GeneratorKind { matrix, phase_space };

inline const char* to_string(GeneratorKind k) {
  return k == GeneratorKind::matrix ? "matrix" : "phase-space";
}

struct Generator {
  std::string label;
  GeneratorKind kind = GeneratorKind::matrix;
  CMatrix matrix;  // kind == matrix
  Vector coeffs;   // kind == phase_space: (a_1..a_N, b_1..b_N, c)

  static Generator from_matrix(std::string label, CMatrix m) {
    if (m.rows() == 0 || !is_hermitian(m))
      throw std::invalid_argument("generator '" + label + "' is not a Hermitian square matrix");
    return {std::move(label), GeneratorKind::matrix, std::move(m), {}};
  }

  static Generator from_coeffs(std::string label, Vector c) {
    if (c.size() < 3 || c.size() % 2 != 1)
      throw std::invalid_argument("generator '" + label + "' needs 2N+1 coefficients");
    if (!c.allFinite()) throw std::invalid_argument("generator '" + label + "' has non-finite coefficients");
    return {std::move(label), GeneratorKind::phase_space, {}, std::move(c)};
  }

  // Hilbert-space dimension (matrix) or number of degrees of freedom N (phase space).
  int dimension() const {
    return kind == GeneratorKind::matrix ? static_cast<int>(matrix.rows())
                                         : static_cast<int>((coeffs.size() - 1) / 2);
  }

  auto a() const { return coeffs.head(dimension()); }
  auto b() const { return coeffs.segment(dimension(), dimension()); }
  double c() const { return coeffs(coeffs.size() - 1); }

  // Phase-space part (a, b) as a 2N vector.
  Vector linear_part() const { return coeffs.head(coeffs.size() - 1); }

  bool is_identity_like(double tol = 1e-12) const {
    if (kind == GeneratorKind::phase_space) return max_abs(linear_part()) == 0.0;
    const Complex mean = matrix.trace() / static_cast<double>(matrix.rows());
    return std::abs(mean.imag()) <= tol &&
           max_abs(matrix - mean * CMatrix::Identity(matrix.rows(), matrix.cols())) <= tol;
  }
};

class GeneratorSet {
 public:
  GeneratorSet() = default;
  GeneratorSet(std::vector<Generator> gens, std::optional<int> identity_index = std::nullopt)
      : gens_(std::move(gens)), identity_index_(identity_index) {
    validate();
  }

  const std::vector<Generator>& generators() const { return gens_; }
  std::size_t size() const { return gens_.size(); }
  const Generator& operator[](std::size_t i) const { return gens_[i]; }
  GeneratorKind kind() const { return gens_.front().kind; }
  // Hilbert-space dimension (matrix kind) or phase-space dimension 2N.
  int dim() const {
    return kind() == GeneratorKind::matrix ? gens_.front().dimension() : 2 * gens_.front().dimension();
  }
  int degrees_of_freedom() const { return gens_.front().dimension(); }
  std::optional<int> identity_index() const { return identity_index_; }
  bool is_identity(std::size_t i) const {
    return identity_index_ && static_cast<std::size_t>(*identity_index_) == i;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& g : gens_) out.push_back(g.label);
    return out;
  }
  // Labels of the non-identity generators, in order.
  std::vector<std::string> active_labels() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < gens_.size(); ++i)
      if (!is_identity(i)) out.push_back(gens_[i].label);
    return out;
  }
  std::vector<std::size_t> active_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < gens_.size(); ++i)
      if (!is_identity(i)) out.push_back(i);
    return out;
  }

  std::optional<std::size_t> find(const std::string& label) const {
    for (std::size_t i = 0; i < gens_.size(); ++i)
      if (gens_[i].label == label) return i;
    return std::nullopt;
  }
  std::size_t index_of(const std::string& label) const {
    if (auto i = find(label)) return *i;
    throw std::invalid_argument("unknown generator label '" + label + "'");
  }

 private:
  void validate() const {
    if (gens_.empty()) throw std::invalid_argument("GeneratorSet: empty");
    std::unordered_set<std::string> seen;
    for (const auto& g : gens_) {
      if (!seen.insert(g.label).second)
        throw std::invalid_argument("GeneratorSet: duplicate label '" + g.label + "'");
      if (g.kind != gens_.front().kind) throw std::invalid_argument("GeneratorSet: mixed generator kinds");
      if (g.dimension() != gens_.front().dimension())
        throw std::invalid_argument("GeneratorSet: mixed dimensions");
    }
    if (identity_index_) {
      const int i = *identity_index_;
      if (i < 0 || i >= static_cast<int>(gens_.size()))
        throw std::invalid_argument("GeneratorSet: identity_index out of range");
      if (!gens_[i].is_identity_like())
        throw std::invalid_argument("GeneratorSet: identity_index does not name an identity generator");
    }
  }

  std::vector<Generator> gens_;
  std::optional<int> identity_index_;
};

// All non-identity Pauli strings on n qubits ("X", "Y", "Z" for one qubit;
// "XI", "XY", ... for two), optionally with the identity string last.
inline GeneratorSet pauli_generators(int n_qubits, bool include_identity = false) {
  if (n_qubits < 1 || n_qubits > 3) throw std::invalid_argument("pauli_generators: 1..3 qubits supported");
  std::vector<Generator> gens;
  const int count = 1 << (2 * n_qubits);
  const char letters[4] = {'I', 'X', 'Y', 'Z'};
  for (int code = 1; code <= count; ++code) {
    const int c = code % count;  // identity string (c == 0) comes last
    if (c == 0 && !include_identity) continue;
    std::string label;
    CMatrix m = CMatrix::Identity(1, 1);
    for (int q = n_qubits - 1; q >= 0; --q) {
      const char letter = letters[(c >> (2 * q)) & 3];
      label += letter;
      m = kron(m, pauli(letter));
    }
    gens.push_back(Generator::from_matrix(label, m));
  }
  std::optional<int> id;
  if (include_identity) id = static_cast<int>(gens.size()) - 1;
  return GeneratorSet(std::move(gens), id);
}

inline std::string position_label(int n, int i) { return n == 1 ? "x" : "q" + std::to_string(i + 1); }
inline std::string momentum_label(int n, int i) { return n == 1 ? "p" : "p" + std::to_string(i + 1); }

// Heisenberg algebra {q_i, p_i} (labels x, p when N = 1), optionally with
// the identity generator "I" (coefficient c = 1) appended.
inline GeneratorSet heisenberg_generators(int n, bool include_identity = false) {
  if (n < 1) throw std::invalid_argument("heisenberg_generators: N must be >= 1");
  std::vector<Generator> gens;
  for (int i = 0; i < n; ++i) {
    Vector c = Vector::Zero(2 * n + 1);
    c(i) = 1.0;
    gens.push_back(Generator::from_coeffs(position_label(n, i), c));
  }
  for (int i = 0; i < n; ++i) {
    Vector c = Vector::Zero(2 * n + 1);
    c(n + i) = 1.0;
    gens.push_back(Generator::from_coeffs(momentum_label(n, i), c));
  }
  std::optional<int> id;
  if (include_identity) {
    Vector c = Vector::Zero(2 * n + 1);
    c(2 * n) = 1.0;
    gens.push_back(Generator::from_coeffs("I", c));
    id = 2 * n;
  }
  return GeneratorSet(std::move(gens), id);
}

// [A, B]. Matrix kind: the anti-Hermitian matrix AB - BA. Phase-space kind:
// a pure identity component whose c is the coefficient of i*identity,
// c = a_A.b_B - b_A.a_B (from [q, p] = i).
inline Generator commutator(const Generator& a, const Generator& b) {
  if (a.kind != b.kind) throw std::invalid_argument("commutator: generator kinds differ");
  if (a.dimension() != b.dimension()) throw std::invalid_argument("commutator: dimensions differ");
  Generator out;
  out.label = "[" + a.label + "," + b.label + "]";
  out.kind = a.kind;
  if (a.kind == GeneratorKind::matrix) {
    out.matrix = a.matrix * b.matrix - b.matrix * a.matrix;
  } else {
    out.coeffs = Vector::Zero(a.coeffs.size());
    out.coeffs(out.coeffs.size() - 1) = a.a().dot(b.b()) - a.b().dot(b.a());
  }
  return out;
}

// Heisenberg-group element exp(i (a.q + b.p + phase)).
struct DisplacementVector {
  Vector a;
  Vector b;
  double phase = 0.0;

  DisplacementVector() = default;
  DisplacementVector(Vector a_, Vector b_, double phase_ = 0.0)
      : a(std::move(a_)), b(std::move(b_)), phase(phase_) {
    if (a.size() != b.size() || a.size() == 0)
      throw std::invalid_argument("DisplacementVector: a and b must have equal length N >= 1");
  }
  static DisplacementVector zero(int n) { return {Vector::Zero(n), Vector::Zero(n), 0.0}; }
  static DisplacementVector from_linear(const Vector& ab, double phase = 0.0) {
    const auto n = ab.size() / 2;
    return {ab.head(n), ab.tail(n), phase};
  }
  // Displacement generated by eps * M for a phase-space generator M.
  static DisplacementVector from_generator(const Generator& g, double eps = 1.0) {
    if (g.kind != GeneratorKind::phase_space)
      throw std::invalid_argument("DisplacementVector: generator must be phase-space kind");
    return {eps * g.a(), eps * g.b(), eps * g.c()};
  }

  int n() const { return static_cast<int>(a.size()); }
  Vector linear() const {
    Vector v(2 * a.size());
    v << a, b;
    return v;
  }
};

inline bool approx_equal(const DisplacementVector& x, const DisplacementVector& y, double tol,
                         bool compare_phase = false) {
  if (x.n() != y.n()) return false;
  if (max_abs(x.a - y.a) > tol || max_abs(x.b - y.b) > tol) return false;
  return !compare_phase || std::abs(x.phase - y.phase) <= tol;
}

// exp(i D1) exp(i D2) = exp(i D), exact (BCH terminates for the Heisenberg group):
// the extra term (1/2)[i D1, i D2] = -(i/2) (a1.b2 - b1.a2).
inline DisplacementVector compose_displacements(const DisplacementVector& d1, const DisplacementVector& d2) {
  if (d1.n() != d2.n()) throw std::invalid_argument("compose_displacements: dimension mismatch");
  const double correction = -0.5 * (d1.a.dot(d2.b) - d1.b.dot(d2.a));
  return {d1.a + d2.a, d1.b + d2.b, d1.phase + d2.phase + correction};
}

inline DisplacementVector inverse(const DisplacementVector& d) { return {-d.a, -d.b, -d.phase}; }

// Transport of exp(i D) through the quadratic flow: (a, b) -> S(t) (a, b).
// S(t) is symplectic, so the phase correction of compose_displacements is
// preserved and the map is a group homomorphism; the phase is unchanged
// because a purely quadratic H adds no c-number terms.
inline DisplacementVector conjugate_by_quadratic_flow(const DisplacementVector& d, const QuadraticHamiltonian& h,
                                                      double t) {
  if (d.n() != h.degrees_of_freedom())
    throw std::invalid_argument("conjugate_by_quadratic_flow: dimension mismatch");
  if (!d.a.allFinite() || !d.b.allFinite()) throw std::invalid_argument("conjugate_by_quadratic_flow: non-finite D");
  return DisplacementVector::from_linear(h.flow_matrix(t) * d.linear(), d.phase);
}

inline DisplacementVector conjugate_by_flow(const DisplacementVector& d, const HamiltonianFunction& h, double t) {
  return conjugate_by_quadratic_flow(d, require_quadratic(h), t);
}

}  // namespace chaosgeo
