#include <random>

#include <gtest/gtest.h>

#include "chaosgeo/geometry.hpp"
#include "oracles.hpp"

using namespace chaosgeo;

namespace {

const GeneratorSet& qubit() {
  static const GeneratorSet g = pauli_generators(1);
  return g;
}

CMatrix axis_unitary(const Eigen::Vector3d& n, double theta) {
  const CMatrix h = n(0) * oracle::pauli('X') + n(1) * oracle::pauli('Y') + n(2) * oracle::pauli('Z');
  return oracle::unitary(h, theta);
}

CVector ket(Complex a, Complex b) {
  CVector v(2);
  v << a, b;
  return v.normalized();
}

// Largest distance of Bloch samples from the plane through a and b.
double off_plane(const std::vector<CMatrix>& traj, const CVector& psi, const Eigen::Vector3d& a,
                 const Eigen::Vector3d& b) {
  const Eigen::Vector3d n = a.cross(b).normalized();
  double worst = 0.0;
  for (const auto& u : traj) worst = std::max(worst, std::abs(n.dot(bloch_vector(u * psi))));
  return worst;
}

}  // namespace

TEST(PathEndpoint, SingleInterval) {
  const GeneratorSet x({qubit()[0]});
  const ProtocolPath path({"X"}, Matrix::Constant(1, 1, kPi / 2));
  const CMatrix expected = Complex(0.0, -1.0) * oracle::pauli('X');
  EXPECT_LT(max_abs(CMatrix(path_endpoint(path, x) - expected)), 1e-14);
}

TEST(PathEndpoint, ZeroControls) {
  const ProtocolPath path({"X", "Y", "Z"}, Matrix::Zero(5, 3));
  EXPECT_LT(max_abs(CMatrix(path_endpoint(path, qubit()) - CMatrix::Identity(2, 2))), 1e-15);
}

TEST(PathEndpoint, TwoIntervalsMatchDirectProduct) {
  const GeneratorSet xz({qubit()[0], qubit()[2]});
  Matrix c(2, 2);
  c << 0.0, kPi / 4, kPi / 4, 0.0;  // columns X, Z; Z first, then X
  const ProtocolPath path({"X", "Z"}, c);
  const CMatrix expected = oracle::unitary(oracle::pauli('X'), kPi / 8) * oracle::unitary(oracle::pauli('Z'), kPi / 8);
  EXPECT_LT(max_abs(CMatrix(path_endpoint(path, xz) - expected)), 1e-14);
}

TEST(PathEndpoint, Errors) {
  EXPECT_THROW(path_endpoint(ProtocolPath({"x", "p"}, Matrix::Zero(1, 2)), heisenberg_generators(1)),
               std::invalid_argument);
  EXPECT_THROW(path_endpoint(ProtocolPath({"X", "Y"}, Matrix::Zero(1, 2)), qubit()), std::invalid_argument);
  EXPECT_THROW(ProtocolPath({"X"}, Matrix::Constant(1, 1, NAN)), std::invalid_argument);
}

TEST(PathCost, Examples) {
  const double theta = 0.83;
  const CostWeights w = CostWeights::for_set(qubit(), {1.0, 1.0, 1.5});
  EXPECT_NEAR(path_cost(ProtocolPath::constant({"X", "Y", "Z"}, Eigen::Vector3d(theta, 0, 0), 8), w), theta, 1e-15);
  EXPECT_NEAR(path_cost(ProtocolPath::constant({"X", "Y", "Z"}, Eigen::Vector3d(0, 0, theta), 8), w),
              theta * std::sqrt(1.5), 1e-14);
  const GeneratorSet with_id = pauli_generators(1, true);
  const CostWeights wi = CostWeights::isotropic(with_id);
  EXPECT_EQ(path_cost(ProtocolPath::constant({"I"}, Vector::Constant(1, 3.0), 4), wi), 0.0);
}

TEST(PathCost, WeightErrors) {
  EXPECT_THROW(CostWeights({{"X", -1.0}}), std::invalid_argument);
  EXPECT_THROW(CostWeights({{"I", 1.0}}, "I"), std::invalid_argument);
  EXPECT_THROW(CostWeights({{"X", 1.0}}).of("Y"), std::invalid_argument);
  EXPECT_THROW(CostWeights::for_set(qubit(), {1.0, 1.0}), std::invalid_argument);
}

TEST(PartialComplexity, LinearRampAndZero) {
  const int k = 64;
  const double c = 1.7;
  Matrix ctrl = Matrix::Zero(k, 3);
  for (int i = 0; i < k; ++i) ctrl(i, 0) = c * (i + 0.5) / k;
  GeodesicResult g;
  g.path = ProtocolPath({"X", "Y", "Z"}, ctrl);
  EXPECT_NEAR(partial_complexity(g, "X"), c / 2, 1e-14);
  EXPECT_EQ(partial_complexity(g, "Y"), 0.0);
  EXPECT_THROW(partial_complexity(g, "W"), std::invalid_argument);
}

TEST(UnitaryComplexity, OneParameterSubgroup) {
  const GeodesicResult g = unitary_complexity(axis_unitary({1, 0, 0}, 0.7), qubit(), CostWeights::isotropic(qubit()));
  EXPECT_TRUE(g.converged);
  EXPECT_NEAR(g.length, 0.7, 1e-8);
  EXPECT_NEAR(g.partial("X"), 0.7, 1e-8);
  EXPECT_NEAR(g.partial("Y"), 0.0, 1e-8);
  EXPECT_NEAR(g.partial("Z"), 0.0, 1e-8);
  EXPECT_NEAR(partial_complexity(g, "X"), 0.7, 1e-8);
  EXPECT_LT(projective_distance(path_endpoint(g.path, qubit()), axis_unitary({1, 0, 0}, 0.7)), 1e-7);
}

TEST(UnitaryComplexity, Identity) {
  const GeodesicResult g = unitary_complexity(CMatrix::Identity(2, 2), qubit(), CostWeights::isotropic(qubit()));
  EXPECT_EQ(g.length, 0.0);
  // A global phase is free.
  const GeodesicResult h =
      unitary_complexity(std::exp(Complex(0, 0.4)) * CMatrix::Identity(2, 2), qubit(), CostWeights::isotropic(qubit()));
  EXPECT_EQ(h.length, 0.0);
}

// Bi-invariant case: the length is the rotation angle modulo phase.
TEST(UnitaryComplexity, RandomAxesIsotropic) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ang(0.05, kPi - 0.05);
  for (int i = 0; i < 20; ++i) {
    const CMatrix v = axis_unitary(oracle::random_axis(rng), ang(rng));
    const GeodesicResult g = unitary_complexity(v, qubit(), CostWeights::isotropic(qubit()));
    EXPECT_NEAR(g.length, oracle::qubit_angle(v), 1e-6) << "target " << i;
  }
}

TEST(UnitaryComplexity, AnisotropicZTarget) {
  const CostWeights w = CostWeights::for_set(qubit(), {1.0, 1.0, 1.5});
  const CMatrix v = axis_unitary({0, 0, 1}, 0.9);
  const GeodesicResult g = unitary_complexity(v, qubit(), w);
  const GeodesicResult d = direct_path_optimize(v, qubit(), w);
  EXPECT_LE(g.length, 0.9 * std::sqrt(1.5) + 1e-8);
  EXPECT_NEAR(g.length, d.length, 1e-3);
}

TEST(UnitaryComplexity, AnisotropicMatchesDirectOptimizer) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ang(0.2, 1.4);
  const CostWeights w = CostWeights::for_set(qubit(), {1.0, 1.0, 1.5});
  for (int i = 0; i < 3; ++i) {
    const CMatrix v = axis_unitary(oracle::random_axis(rng), ang(rng));
    const GeodesicResult g = unitary_complexity(v, qubit(), w);
    const GeodesicResult d = direct_path_optimize(v, qubit(), w);
    EXPECT_NEAR(g.length, d.length, 1e-3) << "target " << i;
    EXPECT_LT(g.endpoint_residual, 1e-8);
  }
}

TEST(UnitaryComplexity, CrossCheckRecordsBothRoutes) {
  SolverConfig cfg;
  cfg.cross_check = true;
  const CostWeights w = CostWeights::for_set(qubit(), {1.0, 2.0, 1.5});
  const GeodesicResult g = unitary_complexity(axis_unitary(Eigen::Vector3d(1, 1, 1).normalized(), 0.8), qubit(), w, cfg);
  EXPECT_TRUE(std::isfinite(g.direct_length));
  EXPECT_NEAR(g.length, g.direct_length, 1e-3);
}

// Any path reaching V costs at least C^u[V].
TEST(UnitaryComplexity, NoShorterRandomPath) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 0.5);
  const CostWeights iso = CostWeights::isotropic(qubit());
  const CostWeights aniso = CostWeights::for_set(qubit(), {1.0, 1.0, 1.5});
  for (int i = 0; i < 100; ++i) {
    Matrix c(4, 3);
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 3; ++k) c(r, k) = n(rng);
    const ProtocolPath path({"X", "Y", "Z"}, c);
    const CostWeights& w = i % 2 ? aniso : iso;
    const GeodesicResult g = unitary_complexity(path_endpoint(path, qubit()), qubit(), w);
    EXPECT_LE(g.length, path_cost(path, w) + 1e-6) << "path " << i;
  }
}

TEST(UnitaryComplexity, WeightScaling) {
  const CMatrix v = axis_unitary(Eigen::Vector3d(0.3, -0.5, 0.8).normalized(), 1.1);
  const CostWeights w = CostWeights::for_set(qubit(), {1.0, 1.0, 1.5});
  const double l1 = unitary_complexity(v, qubit(), w).length;
  const double l4 = unitary_complexity(v, qubit(), w.scaled(4.0)).length;
  EXPECT_NEAR(l4, 2.0 * l1, 1e-6);
}

TEST(UnitaryComplexity, TwoQubitSubgroup) {
  const GeneratorSet g2 = pauli_generators(2);
  SolverConfig cfg;
  cfg.n_starts = 10;
  const CMatrix v = oracle::unitary(kron(oracle::pauli('X'), oracle::pauli('Z')), 0.6);
  const GeodesicResult g = unitary_complexity(v, g2, CostWeights::isotropic(g2), cfg);
  EXPECT_NEAR(g.length, 0.6, 1e-6);
  EXPECT_NEAR(g.partial("XZ"), 0.6, 1e-6);
}

TEST(UnitaryComplexity, Errors) {
  const CostWeights w = CostWeights::isotropic(qubit());
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 1) = 0.5;
  EXPECT_THROW(unitary_complexity(bad, qubit(), w), std::invalid_argument);
  EXPECT_THROW(unitary_complexity(CMatrix::Identity(3, 3), qubit(), w), std::invalid_argument);
  SolverConfig cap;
  cap.dim_cap = 1;
  EXPECT_THROW(unitary_complexity(axis_unitary({1, 0, 0}, 0.3), qubit(), w, cap), std::invalid_argument);
  const GeneratorSet only_x({qubit()[0]});
  EXPECT_THROW(unitary_complexity(axis_unitary({0, 0, 1}, 0.3), only_x, CostWeights::isotropic(only_x)),
               std::invalid_argument);
  EXPECT_THROW(unitary_complexity(axis_unitary({1, 0, 0}, 0.3), qubit(), CostWeights({{"X", 1.0}})),
               std::invalid_argument);
}

TEST(StateComplexity, SameStateIsZero) {
  const CVector psi = ket(0.6, Complex(0.0, 0.8));
  EXPECT_EQ(state_complexity(psi, psi, qubit(), CostWeights::isotropic(qubit())).length, 0.0);
  EXPECT_EQ(state_complexity(psi, Complex(0, 1) * psi, qubit(), CostWeights::isotropic(qubit())).length, 0.0);
}

TEST(StateComplexity, ZeroToOne) {
  const CVector zero = ket(1, 0), one = ket(0, 1);
  const GeodesicResult iso = state_complexity(zero, one, qubit(), CostWeights::isotropic(qubit()));
  EXPECT_NEAR(iso.length, kPi / 2, 1e-4);
  EXPECT_NEAR(std::hypot(iso.partial("X"), iso.partial("Y")), kPi / 2, 1e-4);
  EXPECT_NEAR(iso.partial("Z"), 0.0, 1e-4);
  const GeodesicResult an = state_complexity(zero, one, qubit(), CostWeights::for_set(qubit(), {1.0, 1.0, 1.5}));
  EXPECT_NEAR(an.length, kPi / 2, 1e-3);
}

TEST(StateComplexity, Symmetric) {
  const CVector zero = ket(1, 0), one = ket(0, 1);
  const CostWeights w = CostWeights::isotropic(qubit());
  EXPECT_NEAR(state_complexity(zero, one, qubit(), w).length, state_complexity(one, zero, qubit(), w).length, 1e-6);
  std::mt19937_64 rng(8);
  const CVector a = oracle::random_state(rng, 2), b = oracle::random_state(rng, 2);
  EXPECT_NEAR(state_complexity(a, b, qubit(), w).length, state_complexity(b, a, qubit(), w).length, 1e-6);
}

// Isotropic weights: the state distance is the Fubini-Study angle and the
// optimal curve is a great circle on the Bloch sphere.
TEST(StateComplexity, FubiniStudyGreatCircle) {
  std::mt19937_64 rng(31);
  const CostWeights w = CostWeights::isotropic(qubit());
  for (int i = 0; i < 3; ++i) {
    const CVector a = oracle::random_state(rng, 2), b = oracle::random_state(rng, 2);
    const GeodesicResult g = state_complexity(a, b, qubit(), w);
    EXPECT_NEAR(g.length, std::acos(std::min(1.0, std::abs(a.dot(b)))), 1e-6);
    EXPECT_LT(off_plane(g.trajectory, a, bloch_vector(a), bloch_vector(b)), 1e-6);
  }
}

TEST(StateComplexity, TriangleInequality) {
  std::mt19937_64 rng(12);
  const CostWeights w = CostWeights::for_set(qubit(), {1.0, 1.0, 1.5});
  for (int i = 0; i < 3; ++i) {
    const CVector a = oracle::random_state(rng, 2), b = oracle::random_state(rng, 2), c = oracle::random_state(rng, 2);
    const double ab = state_complexity(a, b, qubit(), w).length;
    const double bc = state_complexity(b, c, qubit(), w).length;
    const double ac = state_complexity(a, c, qubit(), w).length;
    EXPECT_LE(ac, ab + bc + 1e-6);
  }
}

TEST(StateComplexity, Errors) {
  const CostWeights w = CostWeights::isotropic(qubit());
  CVector unnorm(2);
  unnorm << 1.0, 1.0;
  EXPECT_THROW(state_complexity(unnorm, ket(1, 0), qubit(), w), std::invalid_argument);
  EXPECT_THROW(state_complexity(CVector::Zero(3), ket(1, 0), qubit(), w), std::invalid_argument);
}

TEST(HeisenbergComplexity, Examples) {
  const GeneratorSet gens = heisenberg_generators(1, true);
  const CostWeights w = CostWeights::isotropic(gens);
  const double e1 = std::cosh(1.0), e2 = std::sinh(1.0);
  const GeodesicResult g = heisenberg_complexity({Vector::Constant(1, e1), Vector::Constant(1, e2)}, gens, w);
  EXPECT_NEAR(g.partial("x"), e1, 1e-15);
  EXPECT_NEAR(g.partial("p"), e2, 1e-15);
  EXPECT_NEAR(g.length, std::hypot(e1, e2), 1e-14);
  EXPECT_NEAR(partial_complexity(g, "x"), e1, 1e-15);
  const GeodesicResult phase = heisenberg_complexity({Vector::Zero(1), Vector::Zero(1), 0.8}, gens, w);
  EXPECT_EQ(phase.length, 0.0);
  EXPECT_NEAR(phase.partial("I"), 0.8, 1e-15);
  EXPECT_NEAR(heisenberg_complexity({Vector::Constant(1, 3.0), Vector::Constant(1, 4.0)}, gens, w).length, 5.0, 1e-14);
}

TEST(HeisenbergComplexity, WeightedAndErrors) {
  const GeneratorSet gens = heisenberg_generators(1);
  const CostWeights w({{"x", 4.0}, {"p", 1.0}});
  EXPECT_NEAR(heisenberg_complexity({Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)}, gens, w).length,
              std::sqrt(5.0), 1e-14);
  EXPECT_THROW(heisenberg_complexity(DisplacementVector::zero(2), gens, w), std::invalid_argument);
  EXPECT_THROW(heisenberg_complexity(DisplacementVector::zero(1), qubit(), w), std::invalid_argument);
}
