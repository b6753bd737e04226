#include <random>

#include <gtest/gtest.h>

#include "chaosgeo/response.hpp"
#include "oracles.hpp"

using namespace chaosgeo;

namespace {

const GeneratorSet& xp() {
  static const GeneratorSet g = heisenberg_generators(1);
  return g;
}

const GeneratorSet& qubit() {
  static const GeneratorSet g = pauli_generators(1);
  return g;
}

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// Rows are the Pauli vectors of e^{-i sigma_z t} sigma_K e^{i sigma_z t}:
// a rotation about z by 2t.
Matrix z_rotation_rows(double t) {
  const double c = std::cos(2 * t), s = std::sin(2 * t);
  Matrix r(3, 3);
  r << c, s, 0, -s, c, 0, 0, 0, 1;
  return r;
}

QuadraticHamiltonian random_quadratic(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Matrix a(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) a(i, j) = g(rng);
  return QuadraticHamiltonian(0.5 * (a + a.transpose()));
}

}  // namespace

TEST(UnitaryResponse, IhoClosedForm) {
  const ResponseMatrix r = unitary_response_matrix(QuadraticHamiltonian::inverted_oscillator(1.0), xp(), 1.0);
  EXPECT_LT(max_abs(Matrix(r.entries - mat2(1.543081, 1.175201, 1.175201, 1.543081))), 1e-6);
  EXPECT_EQ(r.labels, (std::vector<std::string>{"x", "p"}));
  EXPECT_TRUE(r.all_reliable());
  for (double omega : {0.5, 2.0})
    for (double t : {0.5, 2.0}) {
      const ResponseMatrix n = unitary_response_matrix(QuadraticHamiltonian::inverted_oscillator(omega), xp(), t);
      const ResponseMatrix a = iho_response_analytic(omega, t);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(n.entries(i, j) / a.entries(i, j), 1.0, 1e-6);
    }
}

TEST(UnitaryResponse, IdentityAtZero) {
  std::mt19937_64 rng(4);
  const auto h = random_quadratic(rng, 2);
  const ResponseMatrix r = unitary_response_matrix(h, heisenberg_generators(2), 0.0);
  EXPECT_LT(max_abs(Matrix(r.entries - Matrix::Identity(4, 4))), 1e-10);
  const ResponseMatrix q = unitary_response_matrix(CMatrix(oracle::pauli('Z')), qubit(), 0.0);
  EXPECT_LT(max_abs(Matrix(q.entries - Matrix::Identity(3, 3))), 1e-4);
}

// Row K is the transported displacement of generator K: for the harmonic
// flow S = [[c, s], [-s, c]] this gives R = S^T.
TEST(UnitaryResponse, HarmonicQuarterPeriod) {
  const auto h = QuadraticHamiltonian::harmonic_oscillator(1.0);
  const ResponseMatrix r = unitary_response_matrix(h, xp(), kPi / 2);
  EXPECT_LT(max_abs(Matrix(r.entries - mat2(0, -1, 1, 0))), 1e-9);
  for (int k = 0; k < 2; ++k) {
    const auto d = conjugate_by_quadratic_flow(DisplacementVector::from_generator(xp()[k]), h, kPi / 2);
    EXPECT_LT(max_abs(Vector(r.entries.row(k).transpose() - d.linear())), 1e-9);
  }
}

TEST(UnitaryResponse, UnitDeterminant) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const auto h = random_quadratic(rng, n);
    const ResponseMatrix r = unitary_response_matrix(h, heisenberg_generators(n, true), 0.4 + 0.1 * trial);
    EXPECT_EQ(r.entries.rows(), 2 * n);  // identity generator excluded
    EXPECT_NEAR(r.entries.determinant(), 1.0, 1e-8 * std::max(1.0, r.entries.squaredNorm()));
  }
}

TEST(UnitaryResponse, QubitAdjointRotation) {
  for (double t : {0.1, 0.4}) {
    const ResponseMatrix r = unitary_response_matrix(CMatrix(oracle::pauli('Z')), qubit(), t);
    EXPECT_LT(max_abs(Matrix(r.entries - z_rotation_rows(t))), 1e-5) << "t = " << t;
  }
}

TEST(StateResponse, GaussianEqualsUnitaryIho) {
  const auto h = QuadraticHamiltonian::inverted_oscillator(1.0);
  const ResponseMatrix s = state_response_matrix(GaussianWignerState::vacuum(1), h, xp(), 1.0);
  EXPECT_EQ(s.flavor, ResponseFlavor::state);
  EXPECT_LT(max_abs(Matrix(s.entries - mat2(1.543081, 1.175201, 1.175201, 1.543081))), 1e-6);
  EXPECT_LT(max_abs(Matrix(s.entries - unitary_response_matrix(h, xp(), 1.0).entries)), 1e-8);
}

TEST(StateResponse, GaussianIdentityAndJacobian) {
  const auto h = QuadraticHamiltonian::inverted_oscillator(2.0);
  Vector mean(2);
  mean << 0.3, -0.2;
  const GaussianWignerState psi(mean, mat2(1.0, 0.2, 0.2, 0.5));
  EXPECT_LT(max_abs(Matrix(state_response_matrix(psi, h, xp(), 0.0).entries - Matrix::Identity(2, 2))), 1e-15);
  for (double t = 0.0; t <= 5.0; t += 0.5) {
    const Matrix jac = oracle::iho_flow(2.0, t);
    const ResponseMatrix r = state_response_matrix(psi, h, xp(), t);
    EXPECT_LT(max_abs(Matrix(r.entries - jac.transpose())) / std::max(1.0, max_abs(jac)), 1e-10);
  }
}

// Perturbing |+> by sigma_K and evolving under sigma_z: the generator of the
// shortest state path is the rotated Pauli vector with its component along
// the evolved Bloch vector removed.
TEST(StateResponse, QubitProjectedAdjoint) {
  CVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const double t = 0.2;
  const ResponseMatrix r = state_response_matrix(plus, CMatrix(oracle::pauli('Z')), qubit(), t);
  Matrix expected = z_rotation_rows(t);
  const Eigen::Vector3d n(std::cos(2 * t), std::sin(2 * t), 0.0);
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d v = expected.row(k).transpose();
    expected.row(k) = (v - n.dot(v) * n).transpose();
  }
  EXPECT_LT(max_abs(Matrix(r.entries.topLeftCorner(2, 2) - expected.topLeftCorner(2, 2))), 1e-4);
  EXPECT_LT(max_abs(Matrix(r.entries - expected)), 1e-4);
}

TEST(Spectrum, Examples) {
  ResponseMatrix id;
  id.entries = Matrix::Identity(3, 3);
  const ResponseSpectrum s0 = response_spectrum(id);
  EXPECT_LT(max_abs(Vector(s0.eigenvalues - Vector::Ones(3))), 1e-15);
  const ResponseSpectrum s = response_spectrum(iho_response_analytic(1.0, 1.0));
  EXPECT_NEAR(s.eigenvalues(0), std::exp(2.0), 1e-9);
  EXPECT_NEAR(s.eigenvalues(1), std::exp(-2.0), 1e-12);
  EXPECT_LT(max_abs(Matrix(s.L_matrix - s.L_matrix.transpose())), 1e-15);
}

TEST(Spectrum, ProductIsDetSquared) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    ResponseMatrix r;
    r.entries.resize(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) r.entries(i, j) = g(rng);
    const double det = r.entries.determinant();
    const ResponseSpectrum s = response_spectrum(r);
    EXPECT_NEAR(s.eigenvalues.prod(), det * det, 1e-8 * std::max(1.0, det * det));
    EXPECT_TRUE(std::is_sorted(s.eigenvalues.data(), s.eigenvalues.data() + 4, std::greater<>()));
  }
  ResponseMatrix rect;
  rect.entries = Matrix::Zero(2, 3);
  EXPECT_THROW(response_spectrum(rect), std::invalid_argument);
}

TEST(Lyapunov, SyntheticExponentials) {
  std::vector<ResponseSpectrum> spectra;
  const double lambda = 0.37;
  for (int i = 0; i <= 10; ++i) {
    ResponseSpectrum s;
    s.time = 1.0 + 0.3 * i;
    s.eigenvalues.resize(2);
    s.eigenvalues << std::exp(2 * lambda * s.time), std::exp(-2 * lambda * s.time);
    spectra.push_back(s);
  }
  const LyapunovEstimate e = lyapunov_spectrum(spectra, {0.0, 10.0});
  EXPECT_NEAR(e.lambdas(0), lambda, 1e-12);
  EXPECT_NEAR(e.lambdas(1), -lambda, 1e-12);
  EXPECT_LT(e.residual, 1e-12);
}

TEST(Lyapunov, IhoAndHarmonic) {
  auto fit = [](const QuadraticHamiltonian& h, double t0, double t1, int n) {
    std::vector<ResponseSpectrum> spectra;
    for (int i = 0; i < n; ++i) {
      const double t = t0 + (t1 - t0) * i / (n - 1);
      spectra.push_back(response_spectrum(unitary_response_matrix(h, xp(), t)));
    }
    return lyapunov_spectrum(spectra, {t0, t1});
  };
  const LyapunovEstimate iho = fit(QuadraticHamiltonian::inverted_oscillator(1.0), 5.0, 10.0, 21);
  EXPECT_NEAR(iho.lambdas(0), 1.0, 0.01);
  EXPECT_NEAR(iho.lambdas(1), -1.0, 0.01);
  const LyapunovEstimate ho = fit(QuadraticHamiltonian::harmonic_oscillator(1.0), 20.0, 50.0, 61);
  EXPECT_NEAR(ho.lambdas(0), 0.0, 0.05);
  EXPECT_NEAR(ho.lambdas(1), 0.0, 0.05);
}

TEST(Lyapunov, Errors) {
  std::vector<ResponseSpectrum> few(3);
  for (int i = 0; i < 3; ++i) {
    few[i].time = i;
    few[i].eigenvalues = Vector::Ones(2);
  }
  EXPECT_THROW(lyapunov_spectrum(few, {0.0, 5.0}), std::invalid_argument);
  std::vector<ResponseSpectrum> zero(6);
  for (int i = 0; i < 6; ++i) {
    zero[i].time = i;
    zero[i].eigenvalues = Vector::Ones(2);
  }
  zero[3].eigenvalues(1) = 0.0;
  EXPECT_THROW(lyapunov_spectrum(zero, {0.0, 5.0}), std::invalid_argument);
  EXPECT_THROW(lyapunov_spectrum(zero, {5.0, 5.0}), std::invalid_argument);
}

TEST(Reliability, FlagsCurvedAndBranchChangingStencils) {
  DiffConfig cfg;
  const GeneratorSet& gens = xp();
  auto smooth = [](std::size_t k, double e) {
    Vector v = Vector::Zero(2);
    v(static_cast<Eigen::Index>(k)) = e;
    return detail::StencilValue{v, 1};
  };
  EXPECT_TRUE(detail::central_difference(gens, 0.0, cfg, ResponseFlavor::unitary, smooth).all_reliable());
  auto curved = [](std::size_t k, double e) {
    Vector v = Vector::Zero(2);
    v(static_cast<Eigen::Index>(k)) = e + 1e6 * e * e * e;
    return detail::StencilValue{v, 1};
  };
  const ResponseMatrix c = detail::central_difference(gens, 0.0, cfg, ResponseFlavor::unitary, curved);
  EXPECT_TRUE(c.unreliable(0, 0));
  EXPECT_FALSE(c.unreliable(0, 1));
  auto branch = [](std::size_t k, double e) {
    Vector v = Vector::Zero(2);
    v(static_cast<Eigen::Index>(k)) = e;
    return detail::StencilValue{v, (k == 1 && e > 0) ? 2 : 1};
  };
  const ResponseMatrix b = detail::central_difference(gens, 0.0, cfg, ResponseFlavor::unitary, branch);
  EXPECT_FALSE(b.unreliable.row(0).any());
  EXPECT_TRUE(b.unreliable.row(1).all());
}

TEST(Response, Errors) {
  const auto h = QuadraticHamiltonian::inverted_oscillator(1.0);
  EXPECT_THROW(unitary_response_matrix(h, qubit(), 1.0), std::invalid_argument);
  EXPECT_THROW(unitary_response_matrix(h, heisenberg_generators(2), 1.0), std::invalid_argument);
  EXPECT_THROW(unitary_response_matrix(SeparableHamiltonian::quartic(), xp(), 1.0), std::invalid_argument);
  CMatrix nonherm = CMatrix::Zero(2, 2);
  nonherm(0, 1) = 1.0;
  EXPECT_THROW(unitary_response_matrix(nonherm, qubit(), 1.0), std::invalid_argument);
  DiffConfig bad;
  bad.epsilon = 0.0;
  EXPECT_THROW(unitary_response_matrix(h, xp(), 1.0, bad), std::invalid_argument);
}
