#pragma once

// Bundles and dual-space samplers shared by the unit and acceptance tests.

#include <Eigen/Dense>

#include "lpmech/hamiltonian.hpp"
#include "lpmech/liegroups.hpp"
#include "lpmech/lpbundle.hpp"
#include "lpmech/polynomial.hpp"

namespace fixture {

using namespace lpmech;

/// n = 3, m = 2: constant rotation-generator connection along q1, abelian
/// fiber, omega_12 = s (1 + 0.25 q2^2) scaled by (1 + breaking * q3).
inline LPBundleChart flat_rotation_bundle(double breaking) {
  LPBundleChart b;
  b.base = ChartDomain::box({-1, -1, -1}, {1, 1, 1}, {true, false, false});
  b.m = 2;
  const double k = 0.7;
  b.gamma = SmoothMap::make(3, 12, [k](const auto& q) {
    using T = scalar_of<decltype(q)>;
    Vec<T> g(12, T(0.0));
    // i = 0 block: -k J with J = [[0,-1],[1,0]]
    g[1] = T(k);
    g[2] = T(-k);
    return g;
  });
  b.bracket = constant_map(3, Eigen::VectorXd::Zero(8));
  b.omega = SmoothMap::make(3, 18, [breaking](const auto& q) {
    using T = scalar_of<decltype(q)>;
    Vec<T> w(18, T(0.0));
    const double s[2] = {0.4, -0.3};
    T f = (1.0 + 0.25 * q[1] * q[1]) * (1.0 + breaking * q[2]);
    for (int a = 0; a < 2; ++a) {
      w[(a * 3 + 0) * 3 + 1] = s[a] * f;
      w[(a * 3 + 1) * 3 + 0] = -s[a] * f;
    }
    return w;
  });
  return b;
}

/// so(3) fiber over R^2 with Gamma_i = ad(A_i(q)) and omega = -(dA + [A, A]):
/// a connection by derivations whose curvature is balanced by omega.
inline LPBundleChart gauge_bundle(Rng& rng) {
  const int n = 2, m = 3;
  const Vec<double> c = MatrixLieGroup::so3().structure();
  SmoothMap A = polynomial_map(random_polynomial_table(n, n * m, 2, 0.5, rng));  // A_i^g at i*m + g
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(n), m);
  b.name = "gauge_so3";
  b.bracket = constant_map(n, to_eigen(c));
  b.gamma = SmoothMap::make(n, n * m * m, [A, c, n, m](const auto& q) {
    using T = scalar_of<decltype(q)>;
    Vec<T> a = A.apply(q);
    Vec<T> g(static_cast<size_t>(n) * m * m, T(0.0));
    for (int i = 0; i < n; ++i)
      for (int al = 0; al < m; ++al)
        for (int be = 0; be < m; ++be)
          for (int ga = 0; ga < m; ++ga) g[(i * m + al) * m + be] += c[(al * m + ga) * m + be] * a[i * m + ga];
    return g;
  });
  b.omega = SmoothMap::make<2>(n, m * n * n, [A, c, n, m](const auto& q) {
    using T = scalar_of<decltype(q)>;
    Vec<T> a = A.apply(q);
    Vec<T> da = jacobian_t(A, q);  // d_j A_i^g at (i*m + g)*n + j
    Vec<T> w(static_cast<size_t>(m) * n * n, T(0.0));
    for (int al = 0; al < m; ++al)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          T f = da[(j * m + al) * n + i] - da[(i * m + al) * n + j];
          for (int x = 0; x < m; ++x)
            for (int y = 0; y < m; ++y) f += c[(al * m + x) * m + y] * a[i * m + x] * a[j * m + y];
          w[(al * n + i) * n + j] = -1.0 * f;
        }
    return w;
  });
  return b;
}

inline HPState random_hp(const LPBundleChart& b, Rng& rng) {
  HPState s;
  s.q = b.base.sample(rng);
  s.p.resize(b.n());
  s.nu.resize(b.m);
  for (int i = 0; i < b.n(); ++i) s.p[i] = rng.normal();
  for (int a = 0; a < b.m; ++a) s.nu[a] = rng.normal();
  return s;
}

inline DualObservable random_observable(const LPBundleChart& b, Rng& rng) {
  return polynomial_map(random_polynomial_table(2 * b.n() + b.m, 1, 2, 0.5, rng));
}

}  // namespace fixture
