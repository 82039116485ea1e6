#include "lpmech/systems.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "lpmech/errors.hpp"

namespace lpmech {

namespace {

void require_spd(const Eigen::MatrixXd& a, const std::string& what) {
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument(what + " must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw InvalidArgument(what + " must be positive definite");
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

/// Omega = vee(g^T gdot) from row-major 3x3 blocks at offsets og and od.
template <class T>
std::array<T, 3> so3_body(const Vec<T>& z, size_t og, size_t od) {
  auto M = [&](int i, int j) {
    T s(0.0);
    for (int l = 0; l < 3; ++l) s += z[og + static_cast<size_t>(l) * 3 + i] * z[od + static_cast<size_t>(l) * 3 + j];
    return s;
  };
  return {0.5 * (M(2, 1) - M(1, 2)), 0.5 * (M(0, 2) - M(2, 0)), 0.5 * (M(1, 0) - M(0, 1))};
}

ScenarioData point_scenario(const std::string& name, const MatrixLieGroup& g, const std::string& rep,
                            SmoothMap unreduced) {
  ScenarioData d;
  d.scenario = make_scenario(name, ChartDomain::euclidean(0), g, {}, rep);
  d.unreduced = std::move(unreduced);
  d.g0 = g.identity();
  return d;
}

}  // namespace

SystemRecord flat_bundle_particle(const FlatBundleParams& p) {
  require_spd(p.metric, "metric");
  require_spd(p.fiber_metric, "fiber metric");
  if (!(p.period > 0.0)) throw InvalidArgument("period must be positive");
  if (!(p.metric_bend >= 0.0)) throw InvalidArgument("metric_bend must be non-negative");
  const double inf = std::numeric_limits<double>::infinity();

  LPBundleChart b;
  b.name = "flat_bundle";
  b.base = ChartDomain::box({-0.5 * p.period, -inf}, {0.5 * p.period, inf}, {true, false});
  b.m = 2;
  const double k = p.holonomy / p.period;
  // Gamma^a_{1b} = -k J^a_b: entries (a,b) = (0,1) -> k, (1,0) -> -k.
  b.gamma = SmoothMap::make(2, 8, [k](const auto& q) {
    using T = scalar_of<decltype(q)>;
    Vec<T> g(8, T(0.0));
    g[1] = T(k);
    g[2] = T(-k);
    return g;
  });
  b.bracket = constant_map(2, Eigen::VectorXd::Zero(8));
  const Eigen::Vector2d s = p.omega == OmegaChoice::Zero ? Eigen::Vector2d::Zero() : p.omega_strength;
  b.omega = SmoothMap::make(2, 8, [s](const auto& q) {
    using T = scalar_of<decltype(q)>;
    Vec<T> w(8, T(0.0));
    const T f = 1.0 + 0.25 * q[1] * q[1];
    for (int a = 0; a < 2; ++a) {
      w[a * 4 + 1] = s[a] * f;
      w[a * 4 + 2] = -s[a] * f;
    }
    return w;
  });

  const Eigen::Matrix2d G = p.metric;
  const Eigen::Matrix2d H = p.fiber_metric;
  const double bend = p.metric_bend;
  SmoothMap L = SmoothMap::make(6, 1, [G, H, bend](const auto& x) {
    using T = scalar_of<decltype(x)>;
    const T conf = 1.0 + bend * x[1] * x[1];
    T kin = G(0, 0) * x[2] * x[2] + 2.0 * G(0, 1) * x[2] * x[3] + G(1, 1) * x[3] * x[3];
    T fib = H(0, 0) * x[4] * x[4] + 2.0 * H(0, 1) * x[4] * x[5] + H(1, 1) * x[5] * x[5];
    return Vec<T>{conf * kin + fib};
  });

  GroupAction act;
  act.dim = 1;
  act.structure = {0.0};
  act.genQ = SmoothMap::make(3, 2, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{x[0], T(0.0)};
  });
  act.genV = constant_map(5, Eigen::VectorXd::Zero(2));

  SystemRecord r;
  r.name = "flat_bundle_particle";
  r.description = "particle on a cylinder coupled to a flat rank-2 bundle with rotation holonomy";
  r.lagrangian = {b, L};
  r.action = act;
  r.initial = {vec({0.2, 0.3}), vec({0.7, -0.4}), vec({0.5, 0.8})};
  r.expected = {"energy conserved", "h(v, v) conserved when h commutes with J",
                "v rotated by the holonomy angle after one period of q1 with omega = 0",
                "q1-momentum drifts by -mu . (omega(qdot, e1) + Gamma_1 v)"};
  return r;
}

SystemRecord free_particle(int n) {
  if (n < 1) throw InvalidArgument("free_particle: n must be positive");
  SystemRecord r;
  r.name = "free_particle";
  r.description = "free particle on R^n, no fiber";
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(n), 0);
  b.name = "tangent_bundle";
  SmoothMap L = SmoothMap::make(2 * n, 1, [n](const auto& x) {
    using T = scalar_of<decltype(x)>;
    T e(0.0);
    for (int i = 0; i < n; ++i) e = e + 0.5 * x[n + i] * x[n + i];
    return Vec<T>{e};
  });
  GroupAction act;
  act.dim = n;
  act.structure.assign(static_cast<size_t>(n) * n * n, 0.0);
  act.genQ = SmoothMap::make(2 * n, n, [n](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>(x.begin(), x.begin() + n);
  });
  act.genV = constant_map(2 * n, Eigen::VectorXd::Zero(0));
  r.lagrangian = {b, L};
  r.action = act;
  r.initial.q = Eigen::VectorXd::LinSpaced(n, 0.1, 0.5);
  r.initial.qdot = Eigen::VectorXd::LinSpaced(n, 1.0, -0.5);
  r.initial.v = Eigen::VectorXd(0);
  r.expected = {"straight lines", "linear momentum conserved"};
  return r;
}

SystemRecord central_force_particle(double stiffness, double quartic) {
  if (!(stiffness >= 0.0) || !(quartic >= 0.0)) throw InvalidArgument("central force coefficients must be non-negative");
  SystemRecord r;
  r.name = "central_force_particle";
  r.description = "planar particle in a rotationally symmetric anharmonic well";
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(2), 0);
  b.name = "tangent_bundle";
  SmoothMap L = SmoothMap::make(4, 1, [stiffness, quartic](const auto& x) {
    using T = scalar_of<decltype(x)>;
    const T r2 = x[0] * x[0] + x[1] * x[1];
    return Vec<T>{0.5 * (x[2] * x[2] + x[3] * x[3]) - 0.5 * stiffness * r2 - 0.25 * quartic * r2 * r2};
  });
  GroupAction act;
  act.dim = 1;
  act.structure = {0.0};
  act.genQ = SmoothMap::make(3, 2, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{-x[0] * x[2], x[0] * x[1]};
  });
  act.genV = constant_map(3, Eigen::VectorXd::Zero(0));
  r.lagrangian = {b, L};
  r.action = act;
  r.initial = {vec({1.0, 0.2}), vec({0.1, 0.9}), Eigen::VectorXd(0)};
  r.expected = {"energy conserved", "angular momentum q1 qdot2 - q2 qdot1 conserved"};
  return r;
}

SystemRecord rigid_body(const RigidBodyParams& p) {
  if (!(p.inertia.minCoeff() > 0.0)) throw InvalidArgument("rigid_body: inertia must be positive");
  const Eigen::Vector3d I = p.inertia;
  SmoothMap L = SmoothMap::make(18, 1, [I](const auto& z) {
    using T = scalar_of<decltype(z)>;
    auto w = so3_body(z, 0, 9);
    return Vec<T>{0.5 * (I[0] * w[0] * w[0] + I[1] * w[1] * w[1] + I[2] * w[2] * w[2])};
  });
  SystemRecord r;
  r.name = "rigid_body";
  r.description = "free rigid body reduced by SO(3) to the Euler equations on so(3)";
  r.scenario = point_scenario("rigid_body", MatrixLieGroup::so3(), "none", L);
  r.lagrangian = reduce_lagrangian(r.scenario->scenario, L);
  r.initial = {Eigen::VectorXd(0), Eigen::VectorXd(0), p.omega0};
  r.expected = {"energy conserved", "|I xi| conserved", "principal-axis spin is a relative equilibrium",
                "spatial momentum Ad*_{g^-1}(I xi) conserved along the reconstruction"};
  return r;
}

SystemRecord parameter_lagrangian(const HeavyTopParams& p) {
  if (!(p.inertia.minCoeff() > 0.0)) throw InvalidArgument("heavy_top: inertia must be positive");
  const Eigen::Vector3d I = p.inertia;
  const Eigen::Vector3d chi = p.chi;
  SmoothMap L = SmoothMap::make(24, 1, [I, chi](const auto& z) {
    using T = scalar_of<decltype(z)>;
    auto w = so3_body(z, 0, 9);
    T e = 0.5 * (I[0] * w[0] * w[0] + I[1] * w[1] * w[1] + I[2] * w[2] * w[2]);
    for (int i = 0; i < 3; ++i) {
      T body(0.0);  // (g^T a0)_i
      for (int l = 0; l < 3; ++l) body += z[static_cast<size_t>(l) * 3 + i] * z[18 + l];
      e = e - chi[i] * body + z[18 + i] * z[21 + i];
    }
    return Vec<T>{e};
  });
  SystemRecord r;
  r.name = "heavy_top";
  r.description = "heavy top with the gravity direction as advected parameter, fiber so(3) (+) V* (+) V";
  r.scenario = point_scenario("heavy_top", MatrixLieGroup::so3(), "dual_plus_vector", L);
  r.lagrangian = reduce_lagrangian(r.scenario->scenario, L);
  Eigen::VectorXd v(9);
  v << p.omega0, p.a0, p.b0;
  r.initial = {Eigen::VectorXd(0), Eigen::VectorXd(0), v};
  r.expected = {"energy conserved", "a(t) = g(t)^T a0 along the reconstruction",
                "d/dt I xi = I xi x xi + a x chi", "spatial momentum drift equals the gravity torque"};
  return r;
}

SystemRecord heisenberg_stages(const HeisenbergParams& p) {
  require_spd(p.metric, "heisenberg metric");
  const Eigen::Matrix3d M = p.metric;
  SmoothMap L = SmoothMap::make(18, 1, [M](const auto& z) {
    using T = scalar_of<decltype(z)>;
    // g = [[1, x, c], [0, 1, y], [0, 0, 1]]: g^{-1} gdot = (xdot, ydot, cdot - x ydot) in the basis E01, E12, E02.
    const T& x = z[1];
    const T& xd = z[10];
    const T& cd = z[11];
    const T& yd = z[14];
    Vec<T> xi{xd, yd, cd - x * yd};
    T e(0.0);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) e += 0.5 * M(a, b) * (xi[a] * xi[b]);
    }
    return Vec<T>{e};
  });
  SystemRecord r;
  r.name = "heisenberg_stages";
  r.description = "left-invariant quadratic Lagrangian on the Heisenberg group, reducible by its center first";
  r.scenario = point_scenario("heisenberg", MatrixLieGroup::heisenberg(), "none", L);
  r.scenario->normal = {2};
  r.lagrangian = reduce_lagrangian(r.scenario->scenario, L);
  r.initial = {Eigen::VectorXd(0), Eigen::VectorXd(0), p.xi0};
  r.expected = {"energy conserved", "center momentum conserved",
                "direct and two-stage reductions agree through beta"};
  return r;
}

std::vector<std::string> system_names() {
  return {"flat_bundle_particle", "free_particle", "central_force_particle", "rigid_body", "heavy_top",
          "heisenberg_stages"};
}

SystemRecord system_by_name(const std::string& name) {
  if (name == "flat_bundle_particle") return flat_bundle_particle();
  if (name == "free_particle") return free_particle();
  if (name == "central_force_particle") return central_force_particle();
  if (name == "rigid_body") return rigid_body();
  if (name == "heavy_top" || name == "parameter_lagrangian") return parameter_lagrangian();
  if (name == "heisenberg_stages") return heisenberg_stages();
  throw InvalidArgument("unknown system '" + name + "'");
}

}  // namespace lpmech
