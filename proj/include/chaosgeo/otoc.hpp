#pragma once

// Transfer matrix T_IJ = [M_I, M_J], OTOC matrix O_IJ(t) = [M_I(t), M_J] and
// the relations R^u T = O and <O^dag O> = <T^dag L T>.
//
// Phase-space entries are c-numbers i*c; only c is stored. Matrix-kind entries
// are full commutator matrices.

#include <utility>
#include <vector>

#include "chaosgeo/classical.hpp"
#include "chaosgeo/generators.hpp"
#include "chaosgeo/response.hpp"

namespace chaosgeo {

struct TransferMatrix {
  GeneratorKind kind = GeneratorKind::phase_space;
  std::vector<std::string> labels;
  Matrix coeffs;                             // phase space: T_IJ = i * coeffs(I, J)
  std::vector<std::vector<CMatrix>> blocks;  // matrix kind

  // i T (phase space), a real matrix.
  Matrix i_times() const { return -coeffs; }
};

struct OtocMatrix {
  GeneratorKind kind = GeneratorKind::phase_space;
  std::vector<std::string> labels;
  Matrix coeffs;  // phase space: O_IJ = i * coeffs(I, J)
  std::vector<std::vector<CMatrix>> blocks;
  double time = 0.0;
};

namespace detail {

// Non-identity generators with M_I replaced by f(M_I).
template <typename Evolve>
inline std::vector<Generator> transported(const GeneratorSet& gens, Evolve&& f) {
  std::vector<Generator> out;
  for (std::size_t i : gens.active_indices()) out.push_back(f(gens[i]));
  return out;
}

inline Matrix commutator_coeffs(const std::vector<Generator>& left, const GeneratorSet& gens) {
  const auto active = gens.active_indices();
  Matrix c(static_cast<Eigen::Index>(left.size()), static_cast<Eigen::Index>(active.size()));
  for (std::size_t i = 0; i < left.size(); ++i)
    for (std::size_t j = 0; j < active.size(); ++j) c(i, j) = commutator(left[i], gens[active[j]]).c();
  return c;
}

inline std::vector<std::vector<CMatrix>> commutator_blocks(const std::vector<Generator>& left,
                                                           const GeneratorSet& gens) {
  const auto active = gens.active_indices();
  std::vector<std::vector<CMatrix>> b(left.size());
  for (std::size_t i = 0; i < left.size(); ++i)
    for (std::size_t j : active) b[i].push_back(commutator(left[i], gens[j]).matrix);
  return b;
}

}  // namespace detail

inline TransferMatrix transfer_matrix(const GeneratorSet& gens) {
  TransferMatrix t;
  t.kind = gens.kind();
  t.labels = gens.active_labels();
  const auto left = detail::transported(gens, [](const Generator& g) { return g; });
  if (t.kind == GeneratorKind::phase_space)
    t.coeffs = detail::commutator_coeffs(left, gens);
  else
    t.blocks = detail::commutator_blocks(left, gens);
  return t;
}

// Phase space: M_I(t) is transported with the same linear map as the
// response pipeline, (a, b) -> S(t) (a, b).
inline OtocMatrix otoc_matrix(const HamiltonianFunction& h, const GeneratorSet& gens, double t) {
  if (gens.kind() != GeneratorKind::phase_space)
    throw std::invalid_argument("otoc_matrix: phase-space Hamiltonian needs phase-space generators");
  const QuadraticHamiltonian& q = require_quadratic(h);
  if (q.degrees_of_freedom() != gens.degrees_of_freedom()) throw std::invalid_argument("otoc_matrix: dimension mismatch");
  const Matrix s = q.flow_matrix(t);
  OtocMatrix o;
  o.kind = gens.kind();
  o.labels = gens.active_labels();
  o.time = t;
  const auto left = detail::transported(gens, [&](const Generator& g) {
    Vector c = g.coeffs;
    c.head(c.size() - 1) = s * g.linear_part();
    return Generator::from_coeffs(g.label + "(t)", c);
  });
  o.coeffs = detail::commutator_coeffs(left, gens);
  return o;
}

// Matrix kind: M_I(t) = e^{iHt} M_I e^{-iHt}.
inline OtocMatrix otoc_matrix(const CMatrix& h, const GeneratorSet& gens, double t) {
  if (gens.kind() != GeneratorKind::matrix)
    throw std::invalid_argument("otoc_matrix: matrix Hamiltonian needs matrix generators");
  if (h.rows() != gens.dim() || !is_hermitian(h, 1e-10))
    throw std::invalid_argument("otoc_matrix: Hamiltonian must be Hermitian of the generator dimension");
  const CMatrix u = hermitian_exp(h, t);
  OtocMatrix o;
  o.kind = gens.kind();
  o.labels = gens.active_labels();
  o.time = t;
  const auto left = detail::transported(gens, [&](const Generator& g) {
    CMatrix m = u.adjoint() * g.matrix * u;
    m = 0.5 * (m + m.adjoint()).eval();
    return Generator::from_matrix(g.label + "(t)", m);
  });
  o.blocks = detail::commutator_blocks(left, gens);
  return o;
}

// max |R T - O| over the c-number coefficients.
inline double check_correspondence(const ResponseMatrix& ru, const TransferMatrix& t, const OtocMatrix& o) {
  if (t.kind != GeneratorKind::phase_space || o.kind != GeneratorKind::phase_space)
    throw std::invalid_argument("check_correspondence: defined for phase-space generators only");
  if (ru.entries.cols() != t.coeffs.rows() || t.coeffs.cols() != o.coeffs.cols() ||
      ru.entries.rows() != o.coeffs.rows())
    throw std::invalid_argument("check_correspondence: dimension mismatch");
  return max_abs(ru.entries * t.coeffs - o.coeffs);
}

struct AveragedOtoc {
  Matrix lhs;  // <psi| (O^dag O)_IJ |psi>
  Matrix rhs;  // <psi| (T^dag L T)_IJ |psi>
};

// Both sides of <O^dag O> = <T^dag L^u T> entrywise. Entries are c-number
// operators i*c, so each product is averaged as <(i c_1)^dag (i c_2)> in psi.
inline AveragedOtoc averaged_otoc_identity(const GaussianWignerState& psi, const HamiltonianFunction& h,
                                           const GeneratorSet& gens, double t, const DiffConfig& cfg = {}) {
  psi.validate();
  const OtocMatrix o = otoc_matrix(h, gens, t);
  const TransferMatrix tr = transfer_matrix(gens);
  const ResponseSpectrum spec = response_spectrum(unitary_response_matrix(h, gens, t, cfg));
  const Matrix lt = spec.L_matrix * tr.coeffs;
  const auto n = o.coeffs.rows();
  const CVector zero = CVector::Zero(psi.mean.size());
  auto average = [&](const Matrix& a, const Matrix& b) {
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        Complex acc = 0.0;
        for (Eigen::Index k = 0; k < n; ++k)
          acc += psi.expect_product(zero, Complex(0.0, a(k, i)), zero, Complex(0.0, b(k, j)));
        out(i, j) = acc.real();
      }
    return out;
  };
  return {average(o.coeffs, o.coeffs), average(tr.coeffs, lt)};
}

}  // namespace chaosgeo
