#pragma once

// Complexity geometry: weighted cost functions, protocol paths, geodesic
// solvers on U(n) with a right-invariant metric, and the unitary / state /
// partial complexity functionals.
//
// Paths follow U(1) = P exp(-i int_0^1 dsigma sum_I Y^I(sigma) M_I) with later
// intervals multiplying from the left. The cost of a path is
// int_0^1 dsigma sqrt(sum_I w_I Y^I(sigma)^2); the identity direction is free,
// so endpoints are always matched modulo a global phase.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "chaosgeo/generators.hpp"
#include "chaosgeo/linalg.hpp"

namespace chaosgeo {

class CostWeights {
 public:
  CostWeights() = default;
  CostWeights(std::map<std::string, double> weights, std::optional<std::string> identity_label = std::nullopt)
      : weights_(std::move(weights)), identity_(std::move(identity_label)) {
    for (const auto& [label, w] : weights_) {
      if (identity_ && label == *identity_) {
        if (w != 0.0) throw std::invalid_argument("CostWeights: identity weight is fixed at 0");
        continue;
      }
      if (!(w > 0.0) || !std::isfinite(w))
        throw std::invalid_argument("CostWeights: weight for '" + label + "' must be positive");
    }
  }

  static CostWeights isotropic(const GeneratorSet& gens) { return uniform(gens, 1.0); }

  static CostWeights uniform(const GeneratorSet& gens, double w) {
    std::map<std::string, double> m;
    for (const auto& label : gens.active_labels()) m[label] = w;
    return {m, identity_label(gens)};
  }

  // One weight per non-identity generator, in generator order.
  static CostWeights for_set(const GeneratorSet& gens, const std::vector<double>& values) {
    const auto labels = gens.active_labels();
    if (values.size() != labels.size()) throw std::invalid_argument("CostWeights: one weight per generator");
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]] = values[i];
    return {m, identity_label(gens)};
  }

  double of(const std::string& label) const {
    if (identity_ && label == *identity_) return 0.0;
    auto it = weights_.find(label);
    if (it == weights_.end()) throw std::invalid_argument("CostWeights: missing weight for '" + label + "'");
    return it->second;
  }

  // Weights multiplied by s2; lengths then scale by sqrt(s2).
  CostWeights scaled(double s2) const {
    auto m = weights_;
    for (auto& [label, w] : m)
      if (!identity_ || label != *identity_) w *= s2;
    return {m, identity_};
  }

  const std::map<std::string, double>& map() const { return weights_; }
  const std::optional<std::string>& identity() const { return identity_; }

 private:
  static std::optional<std::string> identity_label(const GeneratorSet& gens) {
    if (auto i = gens.identity_index()) return gens[*i].label;
    return std::nullopt;
  }

  std::map<std::string, double> weights_;
  std::optional<std::string> identity_;
};

// Piecewise-constant controls on a uniform sigma grid.
struct ProtocolPath {
  std::vector<std::string> labels;
  Matrix controls;  // n_intervals x labels.size()

  ProtocolPath() = default;
  ProtocolPath(std::vector<std::string> l, Matrix c) : labels(std::move(l)), controls(std::move(c)) {
    if (controls.cols() != static_cast<Eigen::Index>(labels.size()) || controls.rows() < 1)
      throw std::invalid_argument("ProtocolPath: controls must be n_intervals x n_labels");
    if (!controls.allFinite()) throw std::invalid_argument("ProtocolPath: non-finite controls");
  }

  static ProtocolPath constant(std::vector<std::string> labels, const Vector& y, int n_intervals = 1) {
    Matrix c = y.transpose().replicate(n_intervals, 1);
    return {std::move(labels), c};
  }

  int n_intervals() const { return static_cast<int>(controls.rows()); }
  double dsigma() const { return 1.0 / n_intervals(); }
  std::vector<double> grid() const {
    std::vector<double> g(n_intervals() + 1);
    for (int i = 0; i <= n_intervals(); ++i) g[i] = static_cast<double>(i) / n_intervals();
    return g;
  }
  std::size_t column(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw std::invalid_argument("ProtocolPath: unknown label '" + label + "'");
    return static_cast<std::size_t>(it - labels.begin());
  }
};

struct GeodesicResult {
  ProtocolPath path;
  double length = 0.0;
  std::vector<std::string> labels;
  Vector partials;  // signed, aligned with labels
  double endpoint_residual = 0.0;
  bool converged = false;
  int multiplicity = 1;  // distinct geodesics within tol_length of the minimum
  std::string route;     // "shooting", "direct", "straight-line", "trivial"
  double shooting_length = std::numeric_limits<double>::quiet_NaN();
  double direct_length = std::numeric_limits<double>::quiet_NaN();
  std::vector<CMatrix> trajectory;  // U(sigma) on the path grid (matrix kind)
  Vector initial_velocity;          // shooting: controls at sigma = 0 (non-identity generators)
  Vector stabilizer;                // state complexity: optimal stabilizer parameters

  double partial(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw std::invalid_argument("GeodesicResult: unknown label '" + label + "'");
    return partials(it - labels.begin());
  }
};

struct SolverConfig {
  int n_starts = 200;          // multi-start initial velocities for shooting
  int n_intervals = 64;        // stored path / direct optimizer resolution
  double tol_endpoint = 1e-8;  // endpoint residual for convergence
  double tol_length = 1e-8;    // degeneracy window for the tie-break
  int max_iters = 50;          // Newton iterations per start
  std::uint64_t seed = 0;
  int n_restarts = 10;         // direct optimizer restarts
  int shooting_steps = 128;    // Euler-Arnold integration steps on [0, 1]
  bool cross_check = false;    // also run the direct optimizer when shooting converged
  int dim_cap = 8;
  int stabilizer_scan = 24;    // grid points for the one-angle stabilizer scan
};

// Ordered product of exp(-i dsigma sum_I Y^I M_I), last interval leftmost.
inline CMatrix path_endpoint(const ProtocolPath& path, const GeneratorSet& gens) {
  if (gens.kind() != GeneratorKind::matrix)
    throw std::invalid_argument("path_endpoint: phase-space generators use the displacement pipeline");
  std::vector<std::size_t> cols;
  for (const auto& g : gens.generators()) cols.push_back(path.column(g.label));
  const int n = gens.dim();
  CMatrix u = CMatrix::Identity(n, n);
  for (int k = 0; k < path.n_intervals(); ++k) {
    CMatrix h = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < gens.size(); ++i) h += path.controls(k, cols[i]) * gens[i].matrix;
    u = hermitian_exp(h, path.dsigma()) * u;
  }
  return u;
}

inline double path_cost(const ProtocolPath& path, const CostWeights& w) {
  Vector wv(path.labels.size());
  for (std::size_t i = 0; i < path.labels.size(); ++i) wv(i) = w.of(path.labels[i]);
  double cost = 0.0;
  for (int k = 0; k < path.n_intervals(); ++k)
    cost += std::sqrt((path.controls.row(k).transpose().array().square() * wv.array()).sum());
  return cost * path.dsigma();
}

// Signed integral of the stored path's component along `label`.
inline double partial_complexity(const GeodesicResult& g, const std::string& label) {
  const std::size_t c = g.path.column(label);
  return g.path.controls.col(c).sum() * g.path.dsigma();
}

namespace detail {

// Stack-sized storage for the shooting inner loop (dim <= 8, so m <= 63).
using AVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 63, 1>;
using HMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

inline HMat small_exp(const HMat& h, double t = 1.0) {
  if (h.rows() != 2) return HMat(hermitian_exp(CMatrix(h), t));
  const double h0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double hz = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const double hx = 0.5 * (h(0, 1).real() + h(1, 0).real());
  const double hy = 0.5 * (h(1, 0).imag() - h(0, 1).imag());
  const double r = std::sqrt(hx * hx + hy * hy + hz * hz);
  const double c = std::cos(r * t);
  const double s = r > 0.0 ? std::sin(r * t) / r : t;
  const Complex ph = std::exp(Complex(0.0, -h0 * t));
  HMat u(2, 2);
  u(0, 0) = ph * Complex(c, -s * hz);
  u(1, 1) = ph * Complex(c, s * hz);
  u(0, 1) = ph * Complex(-s * hy, -s * hx);
  u(1, 0) = ph * Complex(s * hy, -s * hx);
  return u;
}

// Traceless parts B_I of the non-identity generators, assumed to span su(n),
// with the Gram matrix and structure constants of the metric.
class AlgebraBasis {
 public:
  AlgebraBasis(const GeneratorSet& gens, const CostWeights& w) : gens_(&gens) {
    if (gens.kind() != GeneratorKind::matrix) throw std::invalid_argument("matrix-kind generators required");
    n_ = gens.dim();
    for (std::size_t i : gens.active_indices()) {
      const auto& g = gens[i];
      CMatrix b = g.matrix - (g.matrix.trace() / static_cast<double>(n_)) * CMatrix::Identity(n_, n_);
      if (max_abs(b) < 1e-12)
        throw std::invalid_argument("generator '" + g.label + "' is a multiple of identity but not marked as such");
      basis_.push_back(b);
      small_basis_.push_back(HMat(b));
      active_.push_back(i);
      weights_.push_back(w.of(g.label));
    }
    m_ = static_cast<int>(basis_.size());
    if (m_ != n_ * n_ - 1)
      throw std::invalid_argument("generators must span su(" + std::to_string(n_) + ") (" +
                                  std::to_string(n_ * n_ - 1) + " independent generators needed)");
    gram_.resize(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) gram_(i, j) = inner(basis_[i], basis_[j]);
    Eigen::FullPivLU<Matrix> lu(gram_);
    if (lu.rank() < m_) throw std::invalid_argument("generators are linearly dependent");
    gram_inv_ = lu.inverse();
    orthonormal_ = max_abs(gram_ - Matrix::Identity(m_, m_)) < 1e-14;
    w_ = Eigen::Map<const Vector>(weights_.data(), m_);
    // Euler-Arnold terms: dY_L/dsigma = sum_ij F_ij^L Pi_i Y_j / w_L.
    terms_.assign(m_, {});
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        const CMatrix c = kI * (basis_[i] * basis_[j] - basis_[j] * basis_[i]);
        if (max_abs(c) < 1e-14) continue;
        for (int l = 0; l < m_; ++l) {
          const double f = inner(c, basis_[l]);
          if (std::abs(f) > 1e-14) terms_[l].push_back({i, j, f / w_(l)});
        }
      }
  }

  int n() const { return n_; }
  int m() const { return m_; }
  const Vector& weights() const { return w_; }
  const std::vector<std::size_t>& active() const { return active_; }

  double inner(const CMatrix& a, const CMatrix& b) const { return (a * b).trace().real() / n_; }

  Vector coords(const CMatrix& x) const {
    Vector p(m_);
    for (int i = 0; i < m_; ++i) p(i) = inner(x, basis_[i]);
    return orthonormal_ ? p : Vector(gram_inv_ * p);
  }

  CMatrix hermitian(const Vector& y) const {
    CMatrix h = CMatrix::Zero(n_, n_);
    for (int i = 0; i < m_; ++i) h += y(i) * basis_[i];
    return h;
  }

  HMat small_hermitian(const AVec& y) const {
    HMat h = HMat::Zero(n_, n_);
    for (int i = 0; i < m_; ++i) h += y(i) * small_basis_[i];
    return h;
  }

  double length(const Vector& y) const { return std::sqrt((y.array().square() * w_.array()).sum()); }

  // Euler-Arnold right-hand side: w_L dY_L/dsigma = <i[Pi, H], B_L>, where
  // Pi is the metric dual of H = sum Y_I B_I.
  AVec euler_arnold(const AVec& y) const {
    AVec pi(m_);
    for (int i = 0; i < m_; ++i) pi(i) = w_(i) * y(i);
    if (!orthonormal_) {
      AVec tmp(m_);
      tmp.noalias() = gram_inv_ * pi;
      pi = tmp;
    }
    AVec out(m_);
    for (int l = 0; l < m_; ++l) {
      double acc = 0.0;
      for (const auto& t : terms_[l]) acc += t.f * pi(t.i) * y(t.j);
      out(l) = acc;
    }
    return out;
  }

  // Residual coordinates of U V^dag modulo phase (zero iff U = e^{ia} V).
  Vector endpoint_residual(const CMatrix& u, const CMatrix& v) const {
    return coords(hermitian_log(strip_phase(u * v.adjoint())));
  }

  // Principal-log branches of the target modulo the centre.
  std::vector<Vector> log_branches(const CMatrix& v) const {
    std::vector<Vector> out;
    const Complex det = v.determinant();
    const CMatrix vs = v * std::exp(Complex(0.0, -std::arg(det) / n_));
    for (int k = 0; k < n_; ++k) {
      const CMatrix vk = vs * std::exp(Complex(0.0, 2.0 * kPi * k / n_));
      out.push_back(coords(hermitian_log(vk)));
    }
    return out;
  }

 private:
  struct Term {
    int i;
    int j;
    double f;
  };

  const GeneratorSet* gens_;
  int n_ = 0;
  int m_ = 0;
  std::vector<CMatrix> basis_;
  std::vector<HMat> small_basis_;
  std::vector<std::size_t> active_;
  std::vector<double> weights_;
  Vector w_;
  Matrix gram_;
  Matrix gram_inv_;
  bool orthonormal_ = false;
  std::vector<std::vector<Term>> terms_;
};

struct Shot {
  CMatrix endpoint;
  Matrix y;                        // m x (steps + 1) controls at the integration nodes
  std::vector<CMatrix> unitaries;  // U at each node (only when recorded)
};

// Integrates the Euler-Arnold equation for the controls with RK4 and the
// group equation dU/dsigma = -i H U with a fourth-order Magnus step whose
// Gauss-node controls come from cubic Hermite interpolation.
inline Shot shoot(const AlgebraBasis& basis, const Vector& y0, int steps, bool record) {
  static const double s3 = std::sqrt(3.0);
  static const double g1 = 0.5 - s3 / 6.0;
  static const double g2 = 0.5 + s3 / 6.0;
  const double h = 1.0 / steps;
  Shot shot;
  const int n = basis.n();
  const int m = basis.m();
  HMat u = HMat::Identity(n, n);
  AVec y = y0;
  AVec dy = basis.euler_arnold(y);
  shot.y.resize(m, steps + 1);
  shot.y.col(0) = y;
  if (record) shot.unitaries.push_back(CMatrix(u));
  auto hermite = [&](const AVec& ya, const AVec& da, const AVec& yb, const AVec& db, double s) {
    const double s2 = s * s, s3c = s2 * s;
    AVec out = (2 * s3c - 3 * s2 + 1) * ya + (s3c - 2 * s2 + s) * h * da + (-2 * s3c + 3 * s2) * yb +
               (s3c - s2) * h * db;
    return out;
  };
  for (int k = 0; k < steps; ++k) {
    const AVec k2 = basis.euler_arnold(y + 0.5 * h * dy);
    const AVec k3 = basis.euler_arnold(y + 0.5 * h * k2);
    const AVec k4 = basis.euler_arnold(y + h * k3);
    const AVec y_next = y + (h / 6.0) * (dy + 2.0 * k2 + 2.0 * k3 + k4);
    const AVec dy_next = basis.euler_arnold(y_next);
    const HMat h1 = basis.small_hermitian(hermite(y, dy, y_next, dy_next, g1));
    const HMat h2 = basis.small_hermitian(hermite(y, dy, y_next, dy_next, g2));
    HMat kmat = (0.5 * h) * (h1 + h2) - Complex(0.0, s3 * h * h / 12.0) * (h2 * h1 - h1 * h2);
    const HMat kh = 0.5 * (kmat + kmat.adjoint());
    u = small_exp(kh) * u;
    y = y_next;
    dy = dy_next;
    shot.y.col(k + 1) = y;
    if (record) shot.unitaries.push_back(CMatrix(u));
  }
  shot.endpoint = CMatrix(u);
  return shot;
}

inline Vector shot_endpoint_residual(const AlgebraBasis& basis, const Vector& y0, int steps, const CMatrix& v) {
  return basis.endpoint_residual(shoot(basis, y0, steps, false).endpoint, v);
}

struct Candidate {
  Vector y0;
  double length = 0.0;
  double residual = 0.0;
  bool converged = false;
};

// Damped Newton on the initial controls so that the shot ends at v (mod phase).
inline Candidate newton_shoot(const AlgebraBasis& basis, const CMatrix& v, Vector y, int steps, double tol,
                              int max_iters) {
  const int m = basis.m();
  auto residual = [&](const Vector& y0) { return shot_endpoint_residual(basis, y0, steps, v); };
  Vector f = residual(y);
  double nf = f.norm();
  const double initial = nf;
  for (int it = 0; it < max_iters && nf > tol; ++it) {
    Matrix jac(m, m);
    for (int j = 0; j < m; ++j) {
      const double hstep = 1e-7 * std::max(1.0, std::abs(y(j)));
      Vector yp = y;
      yp(j) += hstep;
      jac.col(j) = (residual(yp) - f) / hstep;
    }
    Vector delta = jac.colPivHouseholderQr().solve(-f);
    if (!delta.allFinite()) break;
    const double dn = delta.norm();
    if (dn > kPi) delta *= kPi / dn;
    double alpha = 1.0;
    bool improved = false;
    Vector y_new, f_new;
    while (alpha > 1e-4) {
      y_new = y + alpha * delta;
      f_new = residual(y_new);
      if (f_new.norm() < nf) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
    y = y_new;
    f = f_new;
    nf = f.norm();
    // Far starts that make no progress are abandoned early.
    if (it == 4 && nf > 0.5 * initial && nf > 1e-3) break;
  }
  return {y, basis.length(y), nf, nf <= tol};
}

inline std::vector<Vector> fibonacci_directions(int count) {
  std::vector<Vector> out;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    Vector d(3);
    d << r * std::cos(golden * i), r * std::sin(golden * i), z;
    out.push_back(d);
  }
  return out;
}

// Initial velocities: log branches of the target, then directions on the
// weighted unit sphere scaled by lengths pi, 2pi, 3pi.
inline std::vector<Vector> shooting_starts(const AlgebraBasis& basis, const CMatrix& v, const SolverConfig& cfg) {
  std::vector<Vector> starts = basis.log_branches(v);
  const int m = basis.m();
  std::vector<Vector> dirs;
  if (m == 3) {
    dirs = fibonacci_directions(cfg.n_starts);
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    for (int i = 0; i < cfg.n_starts; ++i) {
      Vector d(m);
      for (int j = 0; j < m; ++j) d(j) = normal(rng);
      dirs.push_back(d.normalized());
    }
  }
  for (int i = 0; i < static_cast<int>(dirs.size()); ++i) {
    const double scale = kPi * (1 + i % 3);
    starts.push_back(scale * (dirs[i].array() / basis.weights().array().sqrt()).matrix());
  }
  return starts;
}

// Interval averages of the controls (Simpson when two steps per interval).
inline Matrix interval_controls(const Matrix& ys, int n_intervals) {
  const int steps = static_cast<int>(ys.cols()) - 1;
  const int r = steps / n_intervals;
  Matrix c(n_intervals, ys.rows());
  for (int k = 0; k < n_intervals; ++k) {
    Vector acc = Vector::Zero(ys.rows());
    const int o = k * r;
    if (r % 2 == 0) {
      for (int j = 0; j < r; j += 2) acc += (ys.col(o + j) + 4.0 * ys.col(o + j + 1) + ys.col(o + j + 2)) / 3.0;
    } else {
      for (int j = 0; j < r; ++j) acc += 0.5 * (ys.col(o + j) + ys.col(o + j + 1));
    }
    c.row(k) = acc.transpose() / r;
  }
  return c;
}

// Deterministic reduction: minimal length, then the lexicographically
// smallest partial vector among candidates within tol of the minimum.
template <typename PartialsFn>
inline std::pair<std::size_t, int> select_branch(const std::vector<double>& lengths, PartialsFn partials,
                                                 double tol_length) {
  const double best = *std::min_element(lengths.begin(), lengths.end());
  const double window = tol_length * std::max(1.0, best);
  std::vector<std::size_t> near;
  for (std::size_t i = 0; i < lengths.size(); ++i)
    if (lengths[i] <= best + window) near.push_back(i);
  std::vector<Vector> distinct;
  std::size_t chosen = near.front();
  for (std::size_t i : near) {
    const Vector p = partials(i);
    bool seen = false;
    for (const auto& d : distinct)
      if (max_abs(d - p) < 1e-6) seen = true;
    if (!seen) distinct.push_back(p);
    const Vector pc = partials(chosen);
    if (std::lexicographical_compare(p.data(), p.data() + p.size(), pc.data(), pc.data() + pc.size())) chosen = i;
  }
  return {chosen, static_cast<int>(distinct.size())};
}

inline std::size_t steps_for(const SolverConfig& cfg) {
  const int r = std::max(1, (cfg.shooting_steps + cfg.n_intervals - 1) / cfg.n_intervals);
  return static_cast<std::size_t>(r * cfg.n_intervals);
}

inline GeodesicResult trivial_result(const GeneratorSet& gens, int n_intervals) {
  GeodesicResult r;
  r.labels = gens.labels();
  r.partials = Vector::Zero(static_cast<Eigen::Index>(gens.size()));
  r.path = ProtocolPath(r.labels, Matrix::Zero(n_intervals, static_cast<Eigen::Index>(gens.size())));
  r.converged = true;
  r.route = "trivial";
  if (gens.kind() == GeneratorKind::matrix)
    r.trajectory.assign(n_intervals + 1, CMatrix::Identity(gens.dim(), gens.dim()));
  return r;
}

inline void check_target(const CMatrix& v, const GeneratorSet& gens, const SolverConfig& cfg) {
  if (gens.kind() != GeneratorKind::matrix)
    throw std::invalid_argument("unitary complexity needs matrix-kind generators");
  if (v.rows() != gens.dim() || v.cols() != gens.dim())
    throw std::invalid_argument("target dimension does not match the generator set");
  if (gens.dim() > cfg.dim_cap) throw std::invalid_argument("dimension exceeds the solver cap");
  if (max_abs(v.adjoint() * v - CMatrix::Identity(v.rows(), v.cols())) > 1e-10)
    throw std::invalid_argument("target is not unitary");
}

// Discrete energy of a node path U_0 = I, U_1..U_{K-1} free, U_K = V:
// residual block k is sqrt(w dsigma) * Y_k with exp(-i dsigma H_k) = U_k U_{k-1}^dag
// (mod phase). Node k is exp(-i theta_k . B) G_k around a reference path G.
struct NodePathFunctor : Eigen::DenseFunctor<double> {
  const AlgebraBasis* basis;
  std::vector<CMatrix> reference;  // G_0..G_K
  int intervals;
  Vector scale;                    // sqrt(w dsigma)

  NodePathFunctor(const AlgebraBasis& b, std::vector<CMatrix> ref)
      : Eigen::DenseFunctor<double>(static_cast<int>((ref.size() - 2) * b.m()),
                                    static_cast<int>((ref.size() - 1) * b.m())),
        basis(&b),
        reference(std::move(ref)),
        intervals(static_cast<int>(reference.size()) - 1) {
    scale = (b.weights() / intervals).array().sqrt();
  }

  CMatrix node(const Eigen::VectorXd& theta, int k) const {
    if (k == 0 || k == intervals) return reference[k];
    const int m = basis->m();
    return hermitian_exp(basis->hermitian(theta.segment((k - 1) * m, m))) * reference[k];
  }

  Vector controls(const CMatrix& a, const CMatrix& b) const {
    return basis->coords(hermitian_log(strip_phase(b * a.adjoint()))) * static_cast<double>(intervals);
  }

  Matrix all_controls(const Eigen::VectorXd& theta) const {
    const int m = basis->m();
    Matrix c(intervals, m);
    CMatrix prev = node(theta, 0);
    for (int k = 1; k <= intervals; ++k) {
      CMatrix cur = node(theta, k);
      c.row(k - 1) = controls(prev, cur).transpose();
      prev = std::move(cur);
    }
    return c;
  }

  int operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& fvec) const {
    const int m = basis->m();
    const Matrix c = all_controls(theta);
    for (int k = 0; k < intervals; ++k) fvec.segment(k * m, m) = c.row(k).transpose().cwiseProduct(scale);
    return 0;
  }

  // Node k only touches blocks k and k+1, so nodes of equal parity are
  // perturbed together: 2m residual evaluations per Jacobian.
  int df(const Eigen::VectorXd& theta, Eigen::MatrixXd& fjac) const {
    const int m = basis->m();
    fjac.setZero(values(), inputs());
    Eigen::VectorXd f0(values());
    (*this)(theta, f0);
    for (int parity = 0; parity < 2; ++parity) {
      for (int i = 0; i < m; ++i) {
        Eigen::VectorXd tp = theta;
        const double hstep = 1e-7;
        for (int k = 1 + parity; k < intervals; k += 2) tp((k - 1) * m + i) += hstep;
        Eigen::VectorXd f1(values());
        (*this)(tp, f1);
        for (int k = 1 + parity; k < intervals; k += 2) {
          const int col = (k - 1) * m + i;
          fjac.block((k - 1) * m, col, m, 1) = (f1.segment((k - 1) * m, m) - f0.segment((k - 1) * m, m)) / hstep;
          fjac.block(k * m, col, m, 1) = (f1.segment(k * m, m) - f0.segment(k * m, m)) / hstep;
        }
      }
    }
    return 0;
  }
};

inline GeodesicResult direct_result(const AlgebraBasis& basis, const GeneratorSet& gens, const CostWeights& w,
                                    const Matrix& active_controls, const CMatrix& v) {
  GeodesicResult r;
  r.labels = gens.labels();
  Matrix full = Matrix::Zero(active_controls.rows(), static_cast<Eigen::Index>(gens.size()));
  for (int i = 0; i < basis.m(); ++i) full.col(static_cast<Eigen::Index>(basis.active()[i])) = active_controls.col(i);
  r.path = ProtocolPath(r.labels, full);
  r.length = path_cost(r.path, w);
  r.partials = full.colwise().sum().transpose() * r.path.dsigma();
  // Walk the path once to record the trajectory and the endpoint.
  const int n = gens.dim();
  CMatrix u = CMatrix::Identity(n, n);
  r.trajectory.push_back(u);
  for (int k = 0; k < r.path.n_intervals(); ++k) {
    CMatrix h = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < gens.size(); ++i) h += full(k, static_cast<Eigen::Index>(i)) * gens[i].matrix;
    u = hermitian_exp(h, r.path.dsigma()) * u;
    r.trajectory.push_back(u);
  }
  r.endpoint_residual = basis.endpoint_residual(u, v).norm();
  r.route = "direct";
  r.direct_length = r.length;
  return r;
}

}  // namespace detail

// Direct minimization over piecewise-constant paths with cfg.n_intervals
// intervals: Levenberg-Marquardt on the discrete path energy (whose minimizers
// are constant-speed, hence length-minimizing), with restarts from every
// log branch and from random smooth deformations.
inline GeodesicResult direct_path_optimize(const CMatrix& v, const GeneratorSet& gens, const CostWeights& w,
                                           const SolverConfig& cfg = {}) {
  detail::check_target(v, gens, cfg);
  if (projective_distance(CMatrix::Identity(v.rows(), v.cols()), v) < 1e-15)
    return detail::trivial_result(gens, cfg.n_intervals);
  const detail::AlgebraBasis basis(gens, w);
  const int m = basis.m();
  const int intervals = std::max(2, cfg.n_intervals);
  const auto branches = basis.log_branches(v);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;

  std::vector<GeodesicResult> results;
  std::vector<double> lengths;
  const int restarts = std::max<int>(cfg.n_restarts, static_cast<int>(branches.size()));
  for (int r = 0; r < restarts; ++r) {
    const Vector& y = branches[r % branches.size()];
    std::vector<CMatrix> ref(intervals + 1);
    Vector bump = Vector::Zero(m);
    if (r >= static_cast<int>(branches.size())) {
      for (int j = 0; j < m; ++j) bump(j) = normal(rng);
      bump *= 0.5 * kPi / std::sqrt(static_cast<double>(m));
    }
    for (int k = 0; k <= intervals; ++k) {
      const double s = static_cast<double>(k) / intervals;
      ref[k] = hermitian_exp(basis.hermitian(std::sin(kPi * s) * bump)) * hermitian_exp(basis.hermitian(y), s);
    }
    ref.front() = CMatrix::Identity(v.rows(), v.cols());
    ref.back() = v;
    detail::NodePathFunctor functor(basis, std::move(ref));
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(functor.inputs());
    Eigen::LevenbergMarquardt<detail::NodePathFunctor> lm(functor);
    lm.setXtol(1e-12);
    lm.setFtol(1e-14);
    lm.setGtol(0.0);
    lm.setMaxfev(400);
    lm.minimize(theta);
    results.push_back(detail::direct_result(basis, gens, w, functor.all_controls(theta), v));
    results.back().converged = results.back().endpoint_residual <= std::max(cfg.tol_endpoint, 1e-9);
    lengths.push_back(results.back().converged ? results.back().length : std::numeric_limits<double>::infinity());
  }
  if (std::all_of(lengths.begin(), lengths.end(), [](double l) { return std::isinf(l); })) {
    for (std::size_t i = 0; i < results.size(); ++i) lengths[i] = results[i].length;
  }
  auto [chosen, mult] = detail::select_branch(
      lengths, [&](std::size_t i) { return results[i].partials; }, std::max(cfg.tol_length, 1e-6));
  GeodesicResult best = results[chosen];
  best.multiplicity = mult;
  return best;
}

namespace detail {

// Multi-start search: every start is first solved on a coarse integration
// grid; the distinct coarse solutions near the shortest are then polished on
// the fine grid. `warm` starts are tried before the generated ones.
inline GeodesicResult shoot_geodesic_impl(const CMatrix& v, const GeneratorSet& gens, const CostWeights& w,
                                          const SolverConfig& cfg, const std::vector<Vector>& warm) {
  const AlgebraBasis basis(gens, w);
  const int fine = static_cast<int>(steps_for(cfg));
  const int coarse = std::min(fine, 32);
  const double coarse_tol = std::max(cfg.tol_endpoint, 1e-6);
  const double polish_tol = std::min(cfg.tol_endpoint, 1e-13);

  std::vector<Vector> starts = warm;
  for (auto& s : shooting_starts(basis, v, cfg)) starts.push_back(std::move(s));
  std::vector<Candidate> coarse_found;
  Candidate best_effort;
  best_effort.residual = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    if (start.size() != basis.m()) continue;
    auto c = newton_shoot(basis, v, start, coarse, coarse_tol, cfg.max_iters);
    if (!c.converged) {
      if (c.residual < best_effort.residual) best_effort = c;
      continue;
    }
    bool duplicate = false;
    for (const auto& f : coarse_found)
      if ((f.y0 - c.y0).norm() < 1e-4 * std::max(1.0, c.y0.norm())) duplicate = true;
    if (!duplicate) coarse_found.push_back(std::move(c));
  }

  std::vector<Candidate> found;
  if (!coarse_found.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : coarse_found) best = std::min(best, c.length);
    for (const auto& c : coarse_found) {
      if (c.length > best * 1.01 + 1e-6) continue;
      auto p = newton_shoot(basis, v, c.y0, fine, polish_tol, cfg.max_iters);
      if (p.residual <= cfg.tol_endpoint) {
        p.converged = true;
        found.push_back(std::move(p));
      } else if (p.residual < best_effort.residual) {
        best_effort = p;
      }
    }
  }
  if (found.empty() && std::isfinite(best_effort.residual)) {
    auto p = newton_shoot(basis, v, best_effort.y0, fine, polish_tol, cfg.max_iters);
    p.converged = p.residual <= cfg.tol_endpoint;
    found.push_back(p.residual < best_effort.residual ? p : best_effort);
  }
  if (found.empty()) {
    best_effort.y0 = starts.front();
    best_effort.length = basis.length(best_effort.y0);
    found.push_back(best_effort);
  }
  const bool ok = found.front().converged || std::any_of(found.begin(), found.end(), [](const Candidate& c) {
    return c.converged;
  });
  if (ok) found.erase(std::remove_if(found.begin(), found.end(), [](const Candidate& c) { return !c.converged; }),
                      found.end());

  std::vector<double> lengths;
  std::vector<Vector> partials;
  for (const auto& c : found) {
    lengths.push_back(c.length);
    const auto shot = shoot(basis, c.y0, fine, false);
    const double h = 1.0 / fine;
    partials.push_back(h * (shot.y.rowwise().sum() - 0.5 * (shot.y.col(0) + shot.y.col(fine))));
  }
  auto [chosen, mult] = select_branch(
      lengths, [&](std::size_t i) { return partials[i]; }, cfg.tol_length);

  const auto& c = found[chosen];
  const auto shot = shoot(basis, c.y0, fine, true);
  GeodesicResult r;
  r.labels = gens.labels();
  const Matrix active = interval_controls(shot.y, cfg.n_intervals);
  Matrix full = Matrix::Zero(cfg.n_intervals, static_cast<Eigen::Index>(gens.size()));
  for (int i = 0; i < basis.m(); ++i) full.col(static_cast<Eigen::Index>(basis.active()[i])) = active.col(i);
  r.path = ProtocolPath(r.labels, full);
  r.partials = full.colwise().sum().transpose() * r.path.dsigma();
  r.length = c.length;
  r.endpoint_residual = c.residual;
  r.converged = c.converged;
  r.multiplicity = mult;
  r.route = "shooting";
  r.shooting_length = c.length;
  r.initial_velocity = c.y0;
  const int stride = fine / cfg.n_intervals;
  for (int k = 0; k <= cfg.n_intervals; ++k) r.trajectory.push_back(shot.unitaries[k * stride]);
  return r;
}

}  // namespace detail

// Euler-Arnold multi-start shooting refined by Newton on the endpoint.
inline GeodesicResult shoot_geodesic(const CMatrix& v, const GeneratorSet& gens, const CostWeights& w,
                                     const SolverConfig& cfg = {}) {
  detail::check_target(v, gens, cfg);
  if (projective_distance(CMatrix::Identity(v.rows(), v.cols()), v) < 1e-15)
    return detail::trivial_result(gens, cfg.n_intervals);
  return detail::shoot_geodesic_impl(v, gens, w, cfg, {});
}

namespace detail {

inline GeodesicResult unitary_complexity_impl(const CMatrix& v, const GeneratorSet& gens, const CostWeights& w,
                                              const SolverConfig& cfg, const std::vector<Vector>& warm) {
  check_target(v, gens, cfg);
  if (projective_distance(CMatrix::Identity(v.rows(), v.cols()), v) < 1e-15) return trivial_result(gens, cfg.n_intervals);
  GeodesicResult shot = shoot_geodesic_impl(v, gens, w, cfg, warm);
  if (shot.converged && !cfg.cross_check) return shot;
  GeodesicResult direct = direct_path_optimize(v, gens, w, cfg);
  direct.shooting_length = shot.converged ? shot.length : std::numeric_limits<double>::quiet_NaN();
  shot.direct_length = direct.length;
  if (!shot.converged) return direct.converged ? direct : shot;
  if (direct.converged && direct.length < shot.length - cfg.tol_length * std::max(1.0, shot.length)) return direct;
  return shot;
}

}  // namespace detail

// C^u[V] = min over paths of the weighted cost, V matched modulo phase.
// Shooting is the primary route; the direct optimizer runs when shooting
// fails (or always, with cross_check) and wins only if strictly shorter.
inline GeodesicResult unitary_complexity(const CMatrix& v, const GeneratorSet& gens, const CostWeights& w,
                                         const SolverConfig& cfg = {}) {
  return detail::unitary_complexity_impl(v, gens, w, cfg, {});
}

namespace detail {

// Unitary in span{psi_r, psi_t} rotating psi_r onto psi_t (psi_t rephased so
// the overlap is real and non-negative).
inline CMatrix plane_rotation(const CVector& psi_r, const CVector& psi_t) {
  const Complex overlap = psi_r.dot(psi_t);
  const CVector t = std::abs(overlap) > 0.0 ? CVector(psi_t * std::conj(overlap / std::abs(overlap))) : psi_t;
  const double c = std::clamp(psi_r.dot(t).real(), -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const auto n = psi_r.size();
  CMatrix u = CMatrix::Identity(n, n);
  if (s < 1e-15) return u;
  const CVector perp = (t - c * psi_r) / s;
  u += (c - 1.0) * (psi_r * psi_r.adjoint() + perp * perp.adjoint());
  u += s * (perp * psi_r.adjoint() - psi_r * perp.adjoint());
  return u;
}

// Hermitian basis of the stabilizer algebra of psi modulo phase: operators
// supported on psi's orthogonal complement ((n-1)^2 of them).
inline std::vector<CMatrix> stabilizer_basis(const CVector& psi) {
  const auto n = psi.size();
  CMatrix frame(n, n);
  frame.col(0) = psi;
  frame.rightCols(n - 1) = CMatrix::Identity(n, n - 1);
  Eigen::HouseholderQR<CMatrix> qr(frame);
  const CMatrix q = qr.householderQ();
  const CMatrix e = q.rightCols(n - 1);
  std::vector<CMatrix> out;
  for (Eigen::Index j = 0; j < n - 1; ++j) out.push_back(e.col(j) * e.col(j).adjoint());
  for (Eigen::Index j = 0; j < n - 1; ++j)
    for (Eigen::Index k = j + 1; k < n - 1; ++k) {
      out.push_back(e.col(j) * e.col(k).adjoint() + e.col(k) * e.col(j).adjoint());
      out.push_back(kI * (e.col(j) * e.col(k).adjoint() - e.col(k) * e.col(j).adjoint()));
    }
  return out;
}

// Brent minimization on [lo, hi], then a rescaled second pass so the
// minimizer is resolved well below Brent's absolute tolerance floor.
template <typename F>
inline std::pair<double, double> refine_minimum(F&& f, double lo, double hi) {
  const int bits = std::numeric_limits<double>::digits / 2;
  auto [x1, f1] = boost::math::tools::brent_find_minima(f, lo, hi, bits);
  const double half = 1e-4 * (hi - lo);
  auto g = [&](double u) { return f(x1 + half * u); };
  auto [u2, f2] = boost::math::tools::brent_find_minima(g, -1.0, 1.0, bits);
  if (f2 <= f1) return {x1 + half * u2, f2};
  return {x1, f1};
}

}  // namespace detail

// C^s[psi_r -> psi_t] = min over unitaries U with U psi_r = psi_t (mod phase)
// of C^u[U], searched over the stabilizer of psi_r.
inline GeodesicResult state_complexity(const CVector& psi_r, const CVector& psi_t, const GeneratorSet& gens,
                                       const CostWeights& w, const SolverConfig& cfg = {}) {
  if (gens.kind() != GeneratorKind::matrix) throw std::invalid_argument("state_complexity: matrix kind only");
  if (psi_r.size() != gens.dim() || psi_t.size() != gens.dim())
    throw std::invalid_argument("state_complexity: state dimension mismatch");
  if (std::abs(psi_r.norm() - 1.0) > 1e-10 || std::abs(psi_t.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("state_complexity: states must be normalized");
  if (gens.dim() > cfg.dim_cap) throw std::invalid_argument("dimension exceeds the solver cap");
  if (std::abs(psi_r.dot(psi_t)) >= 1.0 - 1e-15) {
    auto r = detail::trivial_result(gens, cfg.n_intervals);
    r.stabilizer = Vector::Zero(static_cast<Eigen::Index>((gens.dim() - 1) * (gens.dim() - 1)));
    return r;
  }
  const CMatrix u0 = detail::plane_rotation(psi_r, psi_t);
  const auto stab = detail::stabilizer_basis(psi_r);
  const auto family = [&](const Vector& theta) {
    CMatrix k = CMatrix::Zero(gens.dim(), gens.dim());
    for (std::size_t j = 0; j < stab.size(); ++j) k += theta(static_cast<Eigen::Index>(j)) * stab[j];
    return CMatrix(u0 * hermitian_exp(k));
  };
  // The search uses fewer random starts plus the previous solution as a warm
  // start; the final evaluation uses the full configuration.
  SolverConfig quick = cfg;
  quick.n_starts = std::min(cfg.n_starts, 12);
  std::vector<Vector> warm;
  const auto length_at = [&](const Vector& theta) {
    const GeodesicResult g = detail::unitary_complexity_impl(family(theta), gens, w, quick, warm);
    if (g.initial_velocity.size() > 0) warm = {g.initial_velocity};
    return g.length;
  };

  const int p = static_cast<int>(stab.size());
  Vector theta = Vector::Zero(p);
  if (p == 1) {
    const int scan = std::max(4, cfg.stabilizer_scan);
    const double step = 2.0 * kPi / scan;
    int best = 0;
    double best_len = std::numeric_limits<double>::infinity();
    for (int j = 0; j < scan; ++j) {
      const double len = length_at(Vector::Constant(1, j * step));
      if (len < best_len) {
        best_len = len;
        best = j;
      }
    }
    auto f = [&](double phi) { return length_at(Vector::Constant(1, phi)); };
    theta(0) = detail::refine_minimum(f, (best - 1) * step, (best + 1) * step).first;
  } else {
    // Random starts followed by coordinate-wise Brent sweeps.
    std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ULL);
    std::uniform_real_distribution<double> uni(-kPi, kPi);
    double best_len = length_at(theta);
    for (int s = 0; s < cfg.stabilizer_scan; ++s) {
      Vector cand(p);
      for (int j = 0; j < p; ++j) cand(j) = uni(rng);
      const double len = length_at(cand);
      if (len < best_len) {
        best_len = len;
        theta = cand;
      }
    }
    for (int sweep = 0; sweep < 3; ++sweep)
      for (int j = 0; j < p; ++j) {
        auto f = [&](double x) {
          Vector t = theta;
          t(j) = x;
          return length_at(t);
        };
        theta(j) = detail::refine_minimum(f, theta(j) - 0.5, theta(j) + 0.5).first;
      }
  }
  GeodesicResult r = detail::unitary_complexity_impl(family(theta), gens, w, cfg, warm);
  r.stabilizer = theta;
  return r;
}

// Straight-line geodesic for a Heisenberg displacement: the (q, p) plane is
// flat under the weighted cost and the identity direction is free, so the
// partials are the displacement's coordinates in the generator basis.
inline GeodesicResult heisenberg_complexity(const DisplacementVector& d, const GeneratorSet& gens,
                                            const CostWeights& w) {
  if (gens.kind() != GeneratorKind::phase_space)
    throw std::invalid_argument("heisenberg_complexity: phase-space generators required");
  if (gens.degrees_of_freedom() != d.n()) throw std::invalid_argument("heisenberg_complexity: dimension mismatch");
  const auto active = gens.active_indices();
  const int dim = 2 * d.n();
  if (static_cast<int>(active.size()) != dim)
    throw std::invalid_argument("heisenberg_complexity: need exactly 2N non-identity generators");
  Matrix basis(dim, dim);
  for (int i = 0; i < dim; ++i) basis.col(i) = gens[active[i]].linear_part();
  Eigen::FullPivLU<Matrix> lu(basis);
  if (lu.rank() < dim) throw std::invalid_argument("heisenberg_complexity: generators do not span phase space");
  const Vector coeff = lu.solve(d.linear());

  GeodesicResult r;
  r.labels = gens.labels();
  r.partials = Vector::Zero(static_cast<Eigen::Index>(gens.size()));
  for (int i = 0; i < dim; ++i) r.partials(static_cast<Eigen::Index>(active[i])) = coeff(i);
  if (auto id = gens.identity_index()) {
    // Phase left after the linear part is removed (exp(i C.M) has no BCH term).
    const double c_lin = [&] {
      double acc = 0.0;
      for (int i = 0; i < dim; ++i) acc += coeff(i) * gens[active[i]].c();
      return acc;
    }();
    r.partials(*id) = (d.phase - c_lin) / gens[*id].c();
  }
  r.path = ProtocolPath::constant(r.labels, r.partials, 1);
  r.length = path_cost(r.path, w);
  r.endpoint_residual = 0.0;
  r.converged = true;
  r.route = "straight-line";
  return r;
}

// Canonical Heisenberg generators (x, p for N = 1; q_i, p_i otherwise).
inline GeodesicResult heisenberg_complexity(const DisplacementVector& d, const CostWeights& w) {
  const bool with_identity = w.identity().has_value();
  return heisenberg_complexity(d, heisenberg_generators(d.n(), with_identity), w);
}

}  // namespace chaosgeo
