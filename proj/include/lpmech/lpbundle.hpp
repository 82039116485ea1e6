#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lpmech/random.hpp"
#include "lpmech/smoothmap.hpp"

namespace lpmech {

/// Single coordinate chart. Periodic coordinates wrap onto [lower, upper);
/// non-periodic ones must stay inside their closed interval.
struct ChartDomain {
  int n = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> periodic;

  /// Unbounded chart R^n.
  static ChartDomain euclidean(int n);
  static ChartDomain box(std::vector<double> lower, std::vector<double> upper, std::vector<bool> periodic);

  /// Throws InvalidArgument unless bounds are nonempty and periodic bounds finite.
  void validate() const;
  /// Throws ChartViolation when a non-periodic coordinate leaves its interval.
  void check(const Eigen::VectorXd& q) const;
  Eigen::VectorXd wrap(const Eigen::VectorXd& q) const;
  /// Uniform interior point, 5% margin from finite non-periodic bounds;
  /// unbounded sides use the window [-1, 1].
  Eigen::VectorXd sample(Rng& rng) const;
};

/// Coordinate presentation of TQ (+) V over a chart.
///   gamma: q -> Gamma^a_{ib} at (i*m + a)*m + b, with nabla_i e_b = Gamma^a_{ib} e_a
///   bracket: q -> c^g_{ab} at (g*m + a)*m + b, with [e_a, e_b] = c^g_{ab} e_g
///   omega: q -> omega^a_{ij} at (a*n + i)*n + j
struct LPBundleChart {
  ChartDomain base;
  int m = 0;
  SmoothMap gamma;
  SmoothMap bracket;
  SmoothMap omega;
  std::string name;

  int n() const { return base.n; }
  /// Throws DimensionMismatch when a structure map has the wrong shape.
  void validate() const;
};

/// Zero Gamma, bracket and omega.
LPBundleChart trivial_bundle(const ChartDomain& base, int m);

template <class T>
struct StructureAt {
  Vec<T> gamma;
  Vec<T> bracket;
  Vec<T> omega;
};

template <class T>
StructureAt<T> structure_at(const LPBundleChart& b, const Vec<T>& q) {
  return {b.gamma.apply(q), b.bracket.apply(q), b.omega.apply(q)};
}

/// Tangent part X(q) and fiber part w(q) of a section of TQ (+) V.
struct Section {
  SmoothMap X;
  SmoothMap w;
};

Section constant_section(const Eigen::VectorXd& X, const Eigen::VectorXd& w);
/// dq^i coordinate field with zero fiber part.
Section coordinate_field(int n, int m, int i);
/// Zero tangent part and constant fiber basis vector e_alpha.
Section fiber_basis_section(int n, int m, int alpha);
/// Polynomial section of total degree <= degree with Gaussian coefficients.
Section random_section(int n, int m, int degree, double scale, Rng& rng);

// ---- scalar-generic kernels ----

/// (nabla_X w)^a = X^i (d_i w^a + Gamma^a_{ib} w^b), evaluated at q.
template <class T>
Vec<T> covariant_derivative_t(const LPBundleChart& b, const Vec<T>& X, const SmoothMap& w, const Vec<T>& q) {
  const int n = b.n();
  const int m = b.m;
  Vec<T> gam = b.gamma.apply(q);
  Vec<T> wv = w.apply(q);
  Vec<T> dw = jvp_t(w, q, X);
  Vec<T> out = dw;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      for (int c = 0; c < m; ++c) out[a] += X[i] * gam[(static_cast<size_t>(i) * m + a) * m + c] * wv[c];
    }
  }
  return out;
}

/// omega(X, Y)^a = omega^a_{ij} X^i Y^j.
template <class T, class U>
Vec<T> omega_pair_t(const Vec<T>& omega, int n, int m, const Vec<U>& X, const Vec<U>& Y) {
  Vec<T> out(m, T(0.0));
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out[a] += omega[(static_cast<size_t>(a) * n + i) * n + j] * (X[i] * Y[j]);
    }
  }
  return out;
}

/// [x, y]^g = c^g_{ab} x^a y^b for fiber vectors.
template <class T, class U>
Vec<T> fiber_bracket_t(const Vec<T>& c, int m, const Vec<U>& x, const Vec<U>& y) {
  Vec<T> out(m, T(0.0));
  for (int g = 0; g < m; ++g) {
    for (int a = 0; a < m; ++a) {
      for (int d = 0; d < m; ++d) out[g] += c[(static_cast<size_t>(g) * m + a) * m + d] * (x[a] * y[d]);
    }
  }
  return out;
}

/// Gamma(X) w: (Gamma^a_{ib} X^i w^b).
template <class T, class U, class V>
Vec<T> gamma_apply_t(const Vec<T>& gamma, int n, int m, const Vec<U>& X, const Vec<V>& w) {
  Vec<T> out(m, T(0.0));
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      for (int c = 0; c < m; ++c) out[a] += gamma[(static_cast<size_t>(i) * m + a) * m + c] * (X[i] * w[c]);
    }
  }
  return out;
}

/// Tangent and fiber parts of [Z1, Z2] at q, concatenated (n + m entries):
/// base = Jacobi-Lie bracket [X1, X2];
/// fiber = nabla_{X1} w2 - nabla_{X2} w1 - omega(X1, X2) + [w1, w2].
template <class T>
Vec<T> section_bracket_t(const LPBundleChart& b, const Section& z1, const Section& z2, const Vec<T>& q) {
  const int n = b.n();
  const int m = b.m;
  Vec<T> x1 = z1.X.apply(q);
  Vec<T> x2 = z2.X.apply(q);
  Vec<T> w1 = z1.w.apply(q);
  Vec<T> w2 = z2.w.apply(q);
  Vec<T> dx2 = jvp_t(z2.X, q, x1);
  Vec<T> dx1 = jvp_t(z1.X, q, x2);
  Vec<T> out(static_cast<size_t>(n + m), T(0.0));
  for (int i = 0; i < n; ++i) out[i] = dx2[i] - dx1[i];
  StructureAt<T> s = structure_at(b, q);
  Vec<T> dw2 = jvp_t(z2.w, q, x1);
  Vec<T> dw1 = jvp_t(z1.w, q, x2);
  Vec<T> g12 = gamma_apply_t(s.gamma, n, m, x1, w2);
  Vec<T> g21 = gamma_apply_t(s.gamma, n, m, x2, w1);
  Vec<T> om = omega_pair_t(s.omega, n, m, x1, x2);
  Vec<T> br = fiber_bracket_t(s.bracket, m, w1, w2);
  for (int a = 0; a < m; ++a) out[n + a] = (dw2[a] + g12[a]) - (dw1[a] + g21[a]) - om[a] + br[a];
  return out;
}

// ---- double-level operations ----

Eigen::VectorXd covariant_derivative(const LPBundleChart& b, const Eigen::VectorXd& X, const SmoothMap& w,
                                     const Eigen::VectorXd& q);

/// k^a_{ijb} at ((a*n + i)*n + j)*m + b.
Vec<double> curvature(const LPBundleChart& b, const Eigen::VectorXd& q);

/// (d omega)^a_{ijk} at ((a*n + i)*n + j)*n + k; cyclic sum of d_i omega_jk + Gamma_i omega_jk.
/// Evaluated on increasing triples and extended as an alternating tensor, which
/// assumes omega is skew.
Vec<double> ext_cov_derivative_omega(const LPBundleChart& b, const Eigen::VectorXd& q);

/// Returns (tangent part, fiber part).
std::pair<Eigen::VectorXd, Eigen::VectorXd> section_bracket(const LPBundleChart& b, const Section& z1,
                                                            const Section& z2, const Eigen::VectorXd& q);

/// [Z1, Z2] as a new section, evaluable up to two levels below the inputs.
Section bracket_section(const LPBundleChart& b, const Section& z1, const Section& z2);

/// Euclidean norm of the cyclic Jacobi sum at q. Sections need derivative level 2
/// and the structure maps level 1.
double jacobi_residual(const LPBundleChart& b, const Section& z1, const Section& z2, const Section& z3,
                       const Eigen::VectorXd& q);

struct AxiomCondition {
  std::string name;
  std::string description;
  double max_residual = 0.0;
  /// Magnitude of the largest term entering the worst residual, used for the relative part of tol.
  double scale = 0.0;
  Eigen::VectorXd worst_point;
  bool passed = true;
};

struct AxiomReport {
  std::vector<AxiomCondition> conditions;
  int n_samples = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;

  bool all_passed() const;
  /// nullptr when absent.
  const AxiomCondition* find(const std::string& name) const;
  std::string to_text() const;
  std::string to_json() const;
};

/// Sampled check of the conditions under which the section bracket is a Lie bracket:
///   fiber_skew, fiber_jacobi, omega_skew: algebraic shape of the data;
///   omega_closed: d omega = 0;
///   bracket_parallel: nabla is a derivation of the fiber bracket;
///   curvature_omega: k_{ij} = -ad(omega_{ij}).
/// A residual r passes when r <= tol * (1 + scale).
AxiomReport check_axioms(const LPBundleChart& b, int n_samples, std::uint64_t seed, double tol = 1e-8);

}  // namespace lpmech
