#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "lpmech/dynamics.hpp"
#include "lpmech/errors.hpp"
#include "lpmech/lpbundle.hpp"

namespace lpmech {

/// Point of T*Q (+) V*: base point, base covector, fiber covector.
struct HPState {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd nu;
};

/// Function on T*Q (+) V* with input layout (q, p, nu), n + n + m.
using DualObservable = SmoothMap;

struct Hamiltonian {
  LPBundleChart bundle;
  SmoothMap H;

  void validate() const;
};

/// Components of a vector field on T*Q (+) V* in the (q, p, nu) chart.
struct HPField {
  Eigen::VectorXd qdot;
  Eigen::VectorXd pdot;
  Eigen::VectorXd nudot;
};

struct HPTrajectory {
  std::vector<double> times;
  std::vector<HPState> states;
  std::string method;
  double step = 0.0;
};

Eigen::VectorXd pack(const HPState& s);
HPState unpack_hp(const LPBundleChart& b, const Eigen::VectorXd& x);

// ---- scalar-generic kernels ----

/// Base derivative of f along the dual connection, at x = (q, p, nu):
/// (df/dq^i)_cov = df/dq^i + Gamma^b_{ia} nu_b df/dnu_a.
template <class T>
Vec<T> covariant_base_gradient_t(const LPBundleChart& b, const Vec<T>& grad, const Vec<T>& gamma, const Vec<T>& x) {
  const int n = b.n();
  const int m = b.m;
  Vec<T> cov(grad.begin(), grad.begin() + n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      for (int bb = 0; bb < m; ++bb) {
        cov[i] += gamma[(static_cast<size_t>(i) * m + bb) * m + a] * x[2 * n + bb] * grad[2 * n + a];
      }
    }
  }
  return cov;
}

/// {f, g} = cov_f . g_p - cov_g . f_p + <nu, omega(f_p, g_p)> + <nu, [g_nu, f_nu]>.
/// f and g need one derivative level above T.
template <class T>
T poisson_bracket_t(const LPBundleChart& b, const SmoothMap& f, const SmoothMap& g, const Vec<T>& x) {
  const int n = b.n();
  const int m = b.m;
  Vec<T> q(x.begin(), x.begin() + n);
  StructureAt<T> st = structure_at(b, q);
  Vec<T> gf = gradient_t(f, x);
  Vec<T> gg = gradient_t(g, x);
  Vec<T> cf = covariant_base_gradient_t(b, gf, st.gamma, x);
  Vec<T> cg = covariant_base_gradient_t(b, gg, st.gamma, x);
  // Pairwise antisymmetric accumulation keeps {f, f} = 0 bit-exactly; the skew
  // parts of omega and the bracket are used, which are the full tensors on LP bundles.
  T r(0.0);
  for (int i = 0; i < n; ++i) r += cf[i] * gg[n + i] - cg[i] * gf[n + i];
  for (int a = 0; a < m; ++a) {
    const T nua = x[2 * n + a];
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const T w = 0.5 * (st.omega[(static_cast<size_t>(a) * n + i) * n + j] - st.omega[(static_cast<size_t>(a) * n + j) * n + i]);
        r += nua * w * (gf[n + i] * gg[n + j] - gf[n + j] * gg[n + i]);
      }
    }
    for (int c = 0; c < m; ++c) {
      for (int d = c + 1; d < m; ++d) {
        const T k = 0.5 * (st.bracket[(static_cast<size_t>(a) * m + c) * m + d] - st.bracket[(static_cast<size_t>(a) * m + d) * m + c]);
        r += nua * k * (gg[2 * n + c] * gf[2 * n + d] - gg[2 * n + d] * gf[2 * n + c]);
      }
    }
  }
  return r;
}

/// Dense solve A z = r for a row-major k x k system, partial pivoting on real parts.
template <class T>
Vec<T> solve_dense_t(Vec<T> A, Vec<T> r, int k) {
  for (int c = 0; c < k; ++c) {
    int piv = c;
    for (int i = c + 1; i < k; ++i) {
      if (std::abs(value_of(A[static_cast<size_t>(i) * k + c])) > std::abs(value_of(A[static_cast<size_t>(piv) * k + c])))
        piv = i;
    }
    if (value_of(A[static_cast<size_t>(piv) * k + c]) == 0.0) throw SingularHessian("singular linear system");
    if (piv != c) {
      for (int j = 0; j < k; ++j) std::swap(A[static_cast<size_t>(c) * k + j], A[static_cast<size_t>(piv) * k + j]);
      std::swap(r[c], r[piv]);
    }
    for (int i = c + 1; i < k; ++i) {
      const T f = A[static_cast<size_t>(i) * k + c] / A[static_cast<size_t>(c) * k + c];
      for (int j = c; j < k; ++j) A[static_cast<size_t>(i) * k + j] -= f * A[static_cast<size_t>(c) * k + j];
      r[i] -= f * r[c];
    }
  }
  Vec<T> z(k, T(0.0));
  for (int i = k - 1; i >= 0; --i) {
    T s = r[i];
    for (int j = i + 1; j < k; ++j) s -= A[static_cast<size_t>(i) * k + j] * z[j];
    z[i] = s / A[static_cast<size_t>(i) * k + i];
  }
  return z;
}

// ---- observables ----

/// Pullback of a base function f: Q -> R.
DualObservable base_observable(const LPBundleChart& b, const SmoothMap& f);

/// Affine observable P(X (+) w)(q, p, nu) = <p, X(q)> + <nu, w(q)>.
DualObservable affine_observable(const LPBundleChart& b, const Section& z);

/// {f, g} as an observable, differentiable two levels below f and g.
DualObservable bracket_observable(const LPBundleChart& b, const DualObservable& f, const DualObservable& g);

// ---- double-level operations ----

double poisson_bracket(const LPBundleChart& b, const DualObservable& f, const DualObservable& g, const HPState& s);

/// |{P(Z1), P(Z2)}(s) + P([Z1, Z2])(s)|.
double affine_bracket_check(const LPBundleChart& b, const Section& z1, const Section& z2, const HPState& s);

/// qdot = H_p; pdot = -(H_q)_cov + <nu, omega(., H_p)>; nudot_a = c^g_{ba} H_nu^b nu_g + Gamma^b_{ia} qdot^i nu_b.
HPField hamiltonian_vector_field(const Hamiltonian& ham, const HPState& s);

/// Fixed-step integration on (q, p, nu) with the step and wrapping rules of integrate_lp.
HPTrajectory integrate_hp(const Hamiltonian& ham, const HPState& s0, double t0, double t1, double h,
                          Method method = Method::RK4);

std::string hp_trajectory_csv(const HPTrajectory& traj);

/// p = dL/dqdot, nu = dL/dv.
HPState legendre(const LPLagrangian& sys, const LPState& s);

/// Newton iteration on (qdot, v) until |legendre - target| <= tol. Throws
/// NoConvergence after 50 iterations and SingularHessian when the velocity
/// Hessian has condition number above 1e12.
LPState inverse_legendre(const LPLagrangian& sys, const HPState& hs, const LPState& guess, double tol = 1e-12);

/// <p, qdot> + <nu, v> - L at the inverse Legendre point.
double hamiltonian_from_lagrangian(const LPLagrangian& sys, const HPState& hs, const LPState& guess,
                                   double tol = 1e-12);

/// The Legendre-dual Hamiltonian as a map with one derivative level; Newton
/// starts from zero velocities, so the Lagrangian must be hyperregular there.
Hamiltonian legendre_hamiltonian(const LPLagrangian& sys);

}  // namespace lpmech
