#include "lpmech/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpmech/io.hpp"

namespace lpmech {

namespace {

inline size_t gidx(int m, int i, int a, int b) { return (static_cast<size_t>(i) * m + a) * m + b; }
inline size_t cidx(int m, int g, int a, int b) { return (static_cast<size_t>(g) * m + a) * m + b; }
inline size_t oidx(int n, int a, int i, int j) { return (static_cast<size_t>(a) * n + i) * n + j; }

std::string describe(const LPState& s) {
  std::ostringstream os;
  auto put = [&os](const char* name, const Eigen::VectorXd& x) {
    os << name << "=(";
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << format_double(x[i]);
    os << ")";
  };
  put("q", s.q);
  os << " ";
  put("qdot", s.qdot);
  os << " ";
  put("v", s.v);
  return os.str();
}

void check_state(const LPLagrangian& sys, const LPState& s) {
  const int n = sys.bundle.n();
  if (s.q.size() != n || s.qdot.size() != n || s.v.size() != sys.bundle.m) {
    throw DimensionMismatch("state dimensions do not match the bundle");
  }
}

/// Terms that do not involve second-order data: base and fiber right sides of M [qddot; vdot] = rest.
struct Split {
  Eigen::MatrixXd M;
  Eigen::VectorXd rest;
};

Split split(const LPLagrangian& sys, const LPState& s) {
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  LagrangianJet j = lagrangian_jet(sys, s);
  StructureAt<double> st = structure_at(sys.bundle, to_vec(s.q));
  const Eigen::MatrixXd& H = j.hess;
  Split out;
  out.M = H.block(n, n, n + m, n + m);
  out.rest = Eigen::VectorXd::Zero(n + m);
  // base: L_q - mu Gamma v - H_{qdot q} qdot + mu omega qdot
  Eigen::VectorXd base = j.Lq - H.block(n, 0, n, n) * s.qdot;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) base[i] -= j.mu[a] * st.gamma[gidx(m, i, a, b)] * s.v[b];
      for (int k = 0; k < n; ++k) base[i] += j.mu[a] * st.omega[oidx(n, a, i, k)] * s.qdot[k];
    }
  }
  // fiber: ad*_v mu + mu Gamma qdot - H_{v q} qdot
  Eigen::VectorXd fib = -H.block(2 * n, 0, m, n) * s.qdot;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int g = 0; g < m; ++g) fib[a] += st.bracket[cidx(m, g, b, a)] * s.v[b] * j.mu[g];
      for (int i = 0; i < n; ++i) fib[a] += j.mu[b] * st.gamma[gidx(m, i, b, a)] * s.qdot[i];
    }
  }
  out.rest << base, fib;
  return out;
}

}  // namespace

void LPLagrangian::validate() const {
  bundle.validate();
  if (!L.valid()) throw DimensionMismatch("Lagrangian: missing map");
  if (L.in_dim() != 2 * bundle.n() + bundle.m || L.out_dim() != 1) {
    throw DimensionMismatch("Lagrangian: expected (q, qdot, v) -> R with n + n + m = " +
                            std::to_string(2 * bundle.n() + bundle.m) + " inputs");
  }
}

Eigen::VectorXd pack(const LPState& s) {
  Eigen::VectorXd x(s.q.size() + s.qdot.size() + s.v.size());
  x << s.q, s.qdot, s.v;
  return x;
}

LagrangianJet lagrangian_jet(const LPLagrangian& sys, const LPState& s) {
  check_state(sys, s);
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  auto vgh = value_grad_hess_t(sys.L, to_vec(pack(s)));
  LagrangianJet j;
  j.value = vgh.value;
  Eigen::VectorXd g = to_eigen(vgh.grad);
  j.Lq = g.head(n);
  j.p = g.segment(n, n);
  j.mu = g.tail(m);
  const int d = 2 * n + m;
  j.hess.resize(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) j.hess(r, c) = vgh.hess[static_cast<size_t>(r) * d + c];
  }
  return j;
}

LPCovector lp_operator(const LPLagrangian& sys, const LPState2& s2) {
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  if (s2.qddot.size() != n || s2.vdot.size() != m) throw DimensionMismatch("lp_operator: second-order data");
  Split sp = split(sys, {s2.q, s2.qdot, s2.v});
  Eigen::VectorXd acc(n + m);
  acc << s2.qddot, s2.vdot;
  Eigen::VectorXd r = sp.rest - sp.M * acc;
  return {r.head(n), r.tail(m)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> accelerations(const LPLagrangian& sys, const LPState& s) {
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  Split sp = split(sys, s);
  if (n + m == 0) return {Eigen::VectorXd(0), Eigen::VectorXd(0)};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sp.M);
  const auto& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) {
    throw SingularHessian("velocity Hessian is singular (condition " + format_double(cond) + ") at " + describe(s));
  }
  Eigen::VectorXd acc = sp.M.partialPivLu().solve(sp.rest);
  return {acc.head(n), acc.tail(m)};
}

Method parse_method(const std::string& name) {
  if (name == "rk4") return Method::RK4;
  if (name == "euler") return Method::Euler;
  throw InvalidArgument("unknown integration method '" + name + "' (expected rk4 or euler)");
}

std::string method_name(Method m) { return m == Method::RK4 ? "rk4" : "euler"; }

Trajectory integrate_lp(const LPLagrangian& sys, const LPState& s0, double t0, double t1, double h, Method method) {
  sys.validate();
  check_state(sys, s0);
  if (!(h > 0.0)) throw InvalidArgument("integrate_lp: step must be positive");
  if (!(t1 > t0)) throw InvalidArgument("integrate_lp: need t1 > t0");
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  const long steps = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / h - 1e-9)));
  const double dt = (t1 - t0) / static_cast<double>(steps);
  auto unpack = [n, m](const Eigen::VectorXd& y) {
    return LPState{y.head(n), y.segment(n, n), y.tail(m)};
  };
  auto rhs = [&](const Eigen::VectorXd& y) {
    LPState s = unpack(y);
    auto [qdd, vd] = accelerations(sys, s);
    Eigen::VectorXd f(2 * n + m);
    f << s.qdot, qdd, vd;
    return f;
  };
  Trajectory traj;
  traj.method = method_name(method);
  traj.step = dt;
  LPState start = s0;
  start.q = sys.bundle.base.wrap(s0.q);
  sys.bundle.base.check(start.q);
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
    LPState s = unpack(y);
    s.q = sys.bundle.base.wrap(s.q);
    sys.bundle.base.check(s.q);
    y.head(n) = s.q;
    traj.times.push_back(k + 1 == steps ? t1 : t0 + static_cast<double>(k + 1) * dt);
    traj.states.push_back(s);
  }
  return traj;
}

double energy(const LPLagrangian& sys, const LPState& s) {
  check_state(sys, s);
  Vec<double> x = to_vec(pack(s));
  Vec<double> g = gradient_t(sys.L, x);
  const int n = sys.bundle.n();
  double e = -sys.L.apply(x)[0];
  for (int i = 0; i < n; ++i) e += g[n + i] * s.qdot[i];
  for (int a = 0; a < sys.bundle.m; ++a) e += g[2 * n + a] * s.v[a];
  return e;
}

namespace {

Eigen::VectorXd eval_genQ(const GroupAction& act, const Eigen::VectorXd& eta, const Eigen::VectorXd& q) {
  Eigen::VectorXd x(eta.size() + q.size());
  x << eta, q;
  return eval(act.genQ, x);
}

Eigen::VectorXd eval_genV(const GroupAction& act, const Eigen::VectorXd& eta, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& v) {
  Eigen::VectorXd x(eta.size() + q.size() + v.size());
  x << eta, q, v;
  return eval(act.genV, x);
}

void check_action(const LPLagrangian& sys, const GroupAction& act, const Eigen::VectorXd& eta) {
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  if (eta.size() != act.dim) throw DimensionMismatch("generator coefficients do not match the action dimension");
  if (act.genQ.in_dim() != act.dim + n || act.genQ.out_dim() != n) throw DimensionMismatch("action: genQ shape");
  if (act.genV.in_dim() != act.dim + n + m || act.genV.out_dim() != m) throw DimensionMismatch("action: genV shape");
}

}  // namespace

double noether_current(const LPLagrangian& sys, const GroupAction& act, const LPState& s, const Eigen::VectorXd& eta) {
  check_state(sys, s);
  check_action(sys, act, eta);
  const int n = sys.bundle.n();
  Vec<double> g = gradient_t(sys.L, to_vec(pack(s)));
  Eigen::VectorXd etaQ = eval_genQ(act, eta, s.q);
  double j = 0.0;
  for (int i = 0; i < n; ++i) j += g[n + i] * etaQ[i];
  return j;
}

Eigen::VectorXd vertical_generator(const LPLagrangian& sys, const GroupAction& act, const LPState& s,
                                   const Eigen::VectorXd& eta) {
  check_action(sys, act, eta);
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  Eigen::VectorXd etaQ = eval_genQ(act, eta, s.q);
  Eigen::VectorXd out = eval_genV(act, eta, s.q, s.v);
  Vec<double> gam = sys.bundle.gamma.apply(to_vec(s.q));
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) out[a] += gam[gidx(m, i, a, b)] * etaQ[i] * s.v[b];
    }
  }
  return out;
}

double noether_drift_rhs(const LPLagrangian& sys, const GroupAction& act, const LPState& s, const Eigen::VectorXd& eta) {
  check_state(sys, s);
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  Vec<double> g = gradient_t(sys.L, to_vec(pack(s)));
  Eigen::VectorXd etaQ = eval_genQ(act, eta, s.q);
  Eigen::VectorXd ver = vertical_generator(sys, act, s, eta);
  Vec<double> om = sys.bundle.omega.apply(to_vec(s.q));
  Vec<double> w = omega_pair_t(om, n, m, to_vec(s.qdot), to_vec(etaQ));
  double r = 0.0;
  for (int a = 0; a < m; ++a) r -= g[2 * n + a] * (w[a] + ver[a]);
  return r;
}

double NoetherSeries::max_abs_residual() const {
  double r = 0.0;
  for (double x : residual) r = std::max(r, std::abs(x));
  return r;
}

double NoetherSeries::max_abs_dJdt() const {
  double r = 0.0;
  for (double x : dJdt) r = std::max(r, std::abs(x));
  return r;
}

namespace {

/// (-f[i+2] + 8 f[i+1] - 8 f[i-1] + f[i-2]) / (12 h)
template <class V>
V five_point(const std::vector<V>& f, size_t i, double h) {
  return (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
}

double uniform_step(const Trajectory& traj) {
  if (traj.times.size() < 5 || traj.states.size() != traj.times.size()) {
    throw InvalidArgument("trajectory needs at least five samples for the five-point stencil");
  }
  const double h = traj.times[1] - traj.times[0];
  for (size_t i = 1; i < traj.times.size(); ++i) {
    const double d = traj.times[i] - traj.times[i - 1];
    if (!(d > 0.0) || std::abs(d - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw InvalidArgument("trajectory grid is not uniform");
    }
  }
  return h;
}

}  // namespace

NoetherSeries noether_drift_residual(const LPLagrangian& sys, const GroupAction& act, const Trajectory& traj,
                                     const Eigen::VectorXd& eta) {
  const double h = uniform_step(traj);
  std::vector<double> J(traj.states.size());
  for (size_t i = 0; i < J.size(); ++i) J[i] = noether_current(sys, act, traj.states[i], eta);
  NoetherSeries out;
  for (size_t i = 2; i + 2 < J.size(); ++i) {
    const double d = five_point(J, i, h);
    out.times.push_back(traj.times[i]);
    out.current.push_back(J[i]);
    out.dJdt.push_back(d);
    out.residual.push_back(d - noether_drift_rhs(sys, act, traj.states[i], eta));
  }
  return out;
}

double invariance_residual(const LPLagrangian& sys, const GroupAction& act, const LPState& s,
                           const Eigen::VectorXd& eta) {
  check_state(sys, s);
  check_action(sys, act, eta);
  const int n = sys.bundle.n();
  const int k = act.dim;
  // Lifted tangent generator: (D_q eta^Q) qdot, by one dual pass in q.
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(k + n);
  dir.tail(n) = s.qdot;
  Eigen::VectorXd x(k + n);
  x << eta, s.q;
  Eigen::VectorXd liftQ = to_eigen(jvp_t(act.genQ, to_vec(x), to_vec(dir)));
  Eigen::VectorXd etaQ = eval_genQ(act, eta, s.q);
  Eigen::VectorXd vel(2 * n + sys.bundle.m);
  vel << etaQ, liftQ, eval_genV(act, eta, s.q, s.v);
  return to_eigen(jvp_t(sys.L, to_vec(pack(s)), to_vec(vel)))[0];
}

LPState random_state(const LPLagrangian& sys, Rng& rng, double scale) {
  const int n = sys.bundle.n();
  const int m = sys.bundle.m;
  LPState s;
  s.q = sys.bundle.base.sample(rng);
  s.qdot.resize(n);
  s.v.resize(m);
  for (int i = 0; i < n; ++i) s.qdot[i] = scale * rng.normal();
  for (int a = 0; a < m; ++a) s.v[a] = scale * rng.normal();
  return s;
}

InvarianceCheck check_invariance(const LPLagrangian& sys, const GroupAction& act, int n_samples, std::uint64_t seed) {
  Rng rng(seed);
  InvarianceCheck out;
  for (int t = 0; t < n_samples; ++t) {
    LPState s = random_state(sys, rng);
    for (int a = 0; a < act.dim; ++a) {
      const double r = std::abs(invariance_residual(sys, act, s, Eigen::VectorXd::Unit(act.dim, a)));
      if (r > out.max_residual || out.worst_generator < 0) {
        out.max_residual = r;
        out.worst = s;
        out.worst_generator = a;
      }
    }
  }
  return out;
}

std::vector<double> trajectory_lp_residual(const LPLagrangian& sys, const Trajectory& traj) {
  const double h = uniform_step(traj);
  std::vector<Eigen::VectorXd> qd, v;
  for (const auto& s : traj.states) {
    qd.push_back(s.qdot);
    v.push_back(s.v);
  }
  std::vector<double> out;
  for (size_t i = 2; i + 2 < traj.states.size(); ++i) {
    const LPState& s = traj.states[i];
    LPState2 s2{s.q, s.qdot, five_point(qd, i, h), s.v, five_point(v, i, h)};
    out.push_back(lp_operator(sys, s2).norm());
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  if (!traj.states.empty()) {
    const auto& s = traj.states.front();
    for (Eigen::Index i = 0; i < s.q.size(); ++i) out += ",q" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < s.qdot.size(); ++i) out += ",qd" + std::to_string(i + 1);
    for (Eigen::Index i = 0; i < s.v.size(); ++i) out += ",v" + std::to_string(i + 1);
  }
  out += "\n";
  for (size_t k = 0; k < traj.states.size(); ++k) {
    std::vector<double> row = {traj.times[k]};
    for (double x : to_vec(pack(traj.states[k]))) row.push_back(x);
    out += csv_row(row);
  }
  return out;
}

}  // namespace lpmech
