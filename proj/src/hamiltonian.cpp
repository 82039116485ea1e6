#include "lpmech/hamiltonian.hpp"

#include <algorithm>
#include <limits>

#include "lpmech/io.hpp"

namespace lpmech {

void Hamiltonian::validate() const {
  bundle.validate();
  if (!H.valid()) throw DimensionMismatch("Hamiltonian: missing map");
  if (H.in_dim() != 2 * bundle.n() + bundle.m || H.out_dim() != 1) {
    throw DimensionMismatch("Hamiltonian: expected (q, p, nu) -> R with n + n + m = " +
                            std::to_string(2 * bundle.n() + bundle.m) + " inputs");
  }
}

Eigen::VectorXd pack(const HPState& s) {
  Eigen::VectorXd x(s.q.size() + s.p.size() + s.nu.size());
  x << s.q, s.p, s.nu;
  return x;
}

HPState unpack_hp(const LPBundleChart& b, const Eigen::VectorXd& x) {
  const int n = b.n();
  const int m = b.m;
  if (x.size() != 2 * n + m) throw DimensionMismatch("dual state has wrong length");
  return {x.head(n), x.segment(n, n), x.tail(m)};
}

namespace {

void check_hp(const LPBundleChart& b, const HPState& s) {
  if (s.q.size() != b.n() || s.p.size() != b.n() || s.nu.size() != b.m) {
    throw DimensionMismatch("dual state dimensions do not match the bundle");
  }
  b.base.check(s.q);
}

void check_observable(const LPBundleChart& b, const SmoothMap& f) {
  if (!f.valid() || f.in_dim() != 2 * b.n() + b.m || f.out_dim() != 1) {
    throw DimensionMismatch("observable must map (q, p, nu) with n + n + m inputs to R");
  }
}

}  // namespace

DualObservable base_observable(const LPBundleChart& b, const SmoothMap& f) {
  const int n = b.n();
  if (f.in_dim() != n || f.out_dim() != 1) throw DimensionMismatch("base_observable: expected Q -> R");
  return SmoothMap::make(2 * n + b.m, 1, [f, n](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return f.apply(Vec<T>(x.begin(), x.begin() + n));
  });
}

DualObservable affine_observable(const LPBundleChart& b, const Section& z) {
  const int n = b.n();
  const int m = b.m;
  if (z.X.in_dim() != n || z.X.out_dim() != n || z.w.in_dim() != n || z.w.out_dim() != m) {
    throw DimensionMismatch("affine_observable: section shape");
  }
  return SmoothMap::make(2 * n + m, 1, [z, n, m](const auto& x) {
    using T = scalar_of<decltype(x)>;
    Vec<T> q(x.begin(), x.begin() + n);
    Vec<T> X = z.X.apply(q);
    Vec<T> w = z.w.apply(q);
    T r(0.0);
    for (int i = 0; i < n; ++i) r += x[n + i] * X[i];
    for (int a = 0; a < m; ++a) r += x[2 * n + a] * w[a];
    return Vec<T>{r};
  });
}

DualObservable bracket_observable(const LPBundleChart& b, const DualObservable& f, const DualObservable& g) {
  check_observable(b, f);
  check_observable(b, g);
  return SmoothMap::make<2>(2 * b.n() + b.m, 1, [b, f, g](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{poisson_bracket_t<T>(b, f, g, x)};
  });
}

double poisson_bracket(const LPBundleChart& b, const DualObservable& f, const DualObservable& g, const HPState& s) {
  check_hp(b, s);
  check_observable(b, f);
  check_observable(b, g);
  return poisson_bracket_t<double>(b, f, g, to_vec(pack(s)));
}

double affine_bracket_check(const LPBundleChart& b, const Section& z1, const Section& z2, const HPState& s) {
  check_hp(b, s);
  const double lhs = poisson_bracket(b, affine_observable(b, z1), affine_observable(b, z2), s);
  auto [X, w] = section_bracket(b, z1, z2, s.q);
  return std::abs(lhs + s.p.dot(X) + s.nu.dot(w));
}

HPField hamiltonian_vector_field(const Hamiltonian& ham, const HPState& s) {
  const LPBundleChart& b = ham.bundle;
  check_hp(b, s);
  const int n = b.n();
  const int m = b.m;
  const Vec<double> x = to_vec(pack(s));
  const Vec<double> g = gradient_t(ham.H, x);
  StructureAt<double> st = structure_at(b, to_vec(s.q));
  const Vec<double> cov = covariant_base_gradient_t(b, g, st.gamma, x);
  HPField f;
  f.qdot.resize(n);
  f.pdot.resize(n);
  f.nudot = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < n; ++i) f.qdot[i] = g[n + i];
  for (int i = 0; i < n; ++i) {
    double r = -cov[i];
    for (int a = 0; a < m; ++a) {
      for (int j = 0; j < n; ++j) r += s.nu[a] * st.omega[(static_cast<size_t>(a) * n + i) * n + j] * g[n + j];
    }
    f.pdot[i] = r;
  }
  for (int al = 0; al < m; ++al) {
    double r = 0.0;
    for (int bb = 0; bb < m; ++bb) {
      for (int gg = 0; gg < m; ++gg) r += st.bracket[(static_cast<size_t>(gg) * m + bb) * m + al] * g[2 * n + bb] * s.nu[gg];
      for (int i = 0; i < n; ++i) r += st.gamma[(static_cast<size_t>(i) * m + bb) * m + al] * f.qdot[i] * s.nu[bb];
    }
    f.nudot[al] = r;
  }
  return f;
}

HPTrajectory integrate_hp(const Hamiltonian& ham, const HPState& s0, double t0, double t1, double h, Method method) {
  ham.validate();
  const LPBundleChart& b = ham.bundle;
  if (!(h > 0.0)) throw InvalidArgument("integrate_hp: step must be positive");
  if (!(t1 > t0)) throw InvalidArgument("integrate_hp: need t1 > t0");
  const int n = b.n();
  const long steps = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / h - 1e-9)));
  const double dt = (t1 - t0) / static_cast<double>(steps);
  auto rhs = [&](const Eigen::VectorXd& y) {
    HPState s = unpack_hp(b, y);
    s.q = b.base.wrap(s.q);
    HPField f = hamiltonian_vector_field(ham, s);
    Eigen::VectorXd out(y.size());
    out << f.qdot, f.pdot, f.nudot;
    return out;
  };
  HPTrajectory traj;
  traj.method = method_name(method);
  traj.step = dt;
  HPState start = s0;
  start.q = b.base.wrap(s0.q);
  check_hp(b, start);
  traj.times.push_back(t0);
  traj.states.push_back(start);
  Eigen::VectorXd y = pack(start);
  for (long k = 0; k < steps; ++k) {
    if (method == Method::RK4) {
      Eigen::VectorXd k1 = rhs(y);
      Eigen::VectorXd k2 = rhs(y + 0.5 * dt * k1);
      Eigen::VectorXd k3 = rhs(y + 0.5 * dt * k2);
      Eigen::VectorXd k4 = rhs(y + dt * k3);
      y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      y += dt * rhs(y);
    }
    HPState s = unpack_hp(b, y);
    s.q = b.base.wrap(s.q);
    b.base.check(s.q);
    y.head(n) = s.q;
    traj.times.push_back(k + 1 == steps ? t1 : t0 + static_cast<double>(k + 1) * dt);
    traj.states.push_back(s);
  }
  return traj;
}

std::string hp_trajectory_csv(const HPTrajectory& traj) {
  std::string out = "t";
  if (!traj.states.empty()) {
    const auto& s = traj.states.front();
    for (Eigen::Index i = 0; i < s.q.size(); ++i) out += ",q" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < s.p.size(); ++i) out += ",p" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < s.nu.size(); ++i) out += ",nu" + std::to_string(i + 1);
  }
  out += "\n";
  for (size_t k = 0; k < traj.states.size(); ++k) {
    std::vector<double> row = {traj.times[k]};
    for (double x : to_vec(pack(traj.states[k]))) row.push_back(x);
    out += csv_row(row);
  }
  return out;
}

HPState legendre(const LPLagrangian& sys, const LPState& s) {
  LagrangianJet j = lagrangian_jet(sys, s);
  return {s.q, j.p, j.mu};
}

LPState inverse_legendre(const LPLagrangian& sys, const HPState& hs, const LPState& guess, double tol) {
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  if (hs.q.size() != n || hs.p.size() != n || hs.nu.size() != m) throw DimensionMismatch("inverse_legendre: dual state");
  Eigen::VectorXd target(n + m);
  target << hs.p, hs.nu;
  // Absolute tolerance for O(1) momenta, relative beyond.
  const double thr = tol * std::max(1.0, target.size() ? target.cwiseAbs().maxCoeff() : 0.0);
  LPState s{hs.q, guess.qdot, guess.v};
  for (int it = 0; it <= 50; ++it) {
    LagrangianJet j = lagrangian_jet(sys, s);
    Eigen::VectorXd F(n + m);
    F << j.p, j.mu;
    F -= target;
    if (F.size() == 0 || F.cwiseAbs().maxCoeff() <= thr) return s;
    if (it == 50) break;
    const Eigen::MatrixXd M = j.hess.block(n, n, n + m, n + m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e12)) throw SingularHessian("inverse_legendre: velocity Hessian is singular (condition " +
                                               format_double(cond) + ")");
    Eigen::VectorXd dz = M.partialPivLu().solve(F);
    s.qdot -= dz.head(n);
    s.v -= dz.tail(m);
  }
  throw NoConvergence("inverse_legendre: Newton did not converge in 50 iterations");
}

double hamiltonian_from_lagrangian(const LPLagrangian& sys, const HPState& hs, const LPState& guess, double tol) {
  LPState s = inverse_legendre(sys, hs, guess, tol);
  return hs.p.dot(s.qdot) + hs.nu.dot(s.v) - eval(sys.L, pack(s))[0];
}

Hamiltonian legendre_hamiltonian(const LPLagrangian& sys) {
  sys.validate();
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  SmoothMap H = SmoothMap::make<1>(2 * n + m, 1, [sys, n, m](const auto& x) {
    using T = scalar_of<decltype(x)>;
    HPState hs;
    hs.q.resize(n);
    hs.p.resize(n);
    hs.nu.resize(m);
    for (int i = 0; i < n; ++i) hs.q[i] = value_of(x[i]), hs.p[i] = value_of(x[n + i]);
    for (int a = 0; a < m; ++a) hs.nu[a] = value_of(x[2 * n + a]);
    const LPState z0 = inverse_legendre(sys, hs, {hs.q, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(m)});
    Vec<T> y(static_cast<size_t>(2 * n + m));
    for (int i = 0; i < n; ++i) y[i] = x[i], y[n + i] = T(z0.qdot[i]);
    for (int a = 0; a < m; ++a) y[2 * n + a] = T(z0.v[a]);
    // Newton steps in the dual scalar carry the implicit-function derivatives.
    const int k = n + m;
    for (int it = 0; it < ad_level_v<T> + 1 && ad_level_v<T> > 0 && k > 0; ++it) {
      auto vgh = value_grad_hess_t(sys.L, y);
      Vec<T> F(k), J(static_cast<size_t>(k) * k);
      for (int r = 0; r < k; ++r) {
        F[r] = vgh.grad[n + r] - x[n + r];
        for (int c = 0; c < k; ++c) J[static_cast<size_t>(r) * k + c] = vgh.hess[static_cast<size_t>(n + r) * (2 * n + m) + n + c];
      }
      Vec<T> dz = solve_dense_t(J, F, k);
      for (int r = 0; r < k; ++r) y[n + r] -= dz[r];
    }
    T h = -sys.L.apply(y)[0];
    for (int r = 0; r < k; ++r) h += x[n + r] * y[n + r];
    return Vec<T>{h};
  });
  return {sys.bundle, H};
}

}  // namespace lpmech
