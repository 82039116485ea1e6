#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "lpmech/dynamics.hpp"
#include "lpmech/errors.hpp"
#include "lpmech/polynomial.hpp"
#include "lpmech/systems.hpp"
#include "oracles.hpp"

using namespace lpmech;

namespace {

Eigen::VectorXd V(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Hyperregular quadratic Lagrangian on a random structure:
///   L = 1/2 z^T M(q) z + z^T b(q) - U(q), z = (qdot, v), M = M0 + diag(q-dependent)
LPLagrangian random_quadratic(int n, int m, Rng& rng) {
  LPBundleChart bundle = trivial_bundle(ChartDomain::euclidean(n), m);
  bundle.gamma = polynomial_map(random_polynomial_table(n, n * m * m, 1, 0.5, rng));
  bundle.bracket = polynomial_map(random_polynomial_table(n, m * m * m, 1, 0.5, rng));
  bundle.omega = polynomial_map(random_polynomial_table(n, m * n * n, 1, 0.5, rng));
  const int d = n + m;
  Eigen::MatrixXd R = Eigen::MatrixXd::Random(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) R(r, c) = rng.uniform(-0.5, 0.5);
  Eigen::MatrixXd M0 = R * R.transpose() + Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd bq(d);
  for (int k = 0; k < d; ++k) bq[k] = rng.uniform(-1.0, 1.0);
  SmoothMap L = SmoothMap::make(n + d, 1, [n, d, M0, bq](const auto& x) {
    using T = scalar_of<decltype(x)>;
    T e(0.0);
    T qs(0.0);
    for (int i = 0; i < n; ++i) qs = qs + x[i] * x[i];
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) e = e + 0.5 * M0(r, c) * x[n + r] * x[n + c];
      e = e + 0.3 * smath::sin(qs) * x[n + r] * x[n + r];
      e = e + bq[r] * x[0] * x[n + r];
    }
    return Vec<T>{e - 0.5 * qs};
  });
  return {bundle, L};
}

}  // namespace

TEST_CASE("lp_operator: free particle is critical") {
  SystemRecord fp = free_particle(3);
  LPState2 s2{V({0.1, 0.2, 0.3}), V({1, -2, 0.5}), V({0, 0, 0}), Eigen::VectorXd(0), Eigen::VectorXd(0)};
  LPCovector op = lp_operator(fp.lagrangian, s2);
  CHECK(max_abs(op.base) == 0.0);
  CHECK(op.fiber.size() == 0);
  s2.qddot = V({1, 0, 0});
  CHECK(lp_operator(fp.lagrangian, s2).base[0] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("lp_operator: abelian fiber with constant v has zero fiber part") {
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(1), 3);
  SmoothMap L = SmoothMap::make(5, 1, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{0.5 * (x[2] * x[2] + x[3] * x[3] + x[4] * x[4])};
  });
  LPLagrangian sys{b, L};
  LPState2 s2{V({0.4}), V({1.3}), V({0.2}), V({1, 2, 3}), V({0, 0, 0})};
  CHECK(max_abs(lp_operator(sys, s2).fiber) == 0.0);
}

TEST_CASE("lp_operator: hand-expanded fiber part with bracket and connection") {
  // n = 1, m = 2, c^0_{01} = -c^0_{10} = 1, Gamma^0_{01} = 2, L = 1/2 |v|^2.
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(1), 2);
  b.gamma = constant_map(1, V({0, 2, 0, 0}));
  b.bracket = constant_map(1, V({0, 1, -1, 0, 0, 0, 0, 0}));
  SmoothMap L = SmoothMap::make(4, 1, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{0.5 * (x[2] * x[2] + x[3] * x[3])};
  });
  LPLagrangian sys{b, L};
  const double qd = 0.5, v0 = 0.3, v1 = -0.7, vd0 = 0.11, vd1 = 0.13;
  LPCovector op = lp_operator(sys, {V({0.0}), V({qd}), V({0.0}), V({v0, v1}), V({vd0, vd1})});
  // fiber_a = c^g_{ba} v^b mu_g - mudot_a + mu_b Gamma^b_{0a} qdot, mu = v
  const double f0 = (-1.0) * v1 * v0 - vd0;
  const double f1 = (1.0) * v0 * v0 - vd1 + v0 * 2.0 * qd;
  CHECK(op.fiber[0] == doctest::Approx(f0).epsilon(1e-14));
  CHECK(op.fiber[1] == doctest::Approx(f1).epsilon(1e-14));
  // base = -mu Gamma v = -v0 * 2 * v1
  CHECK(op.base[0] == doctest::Approx(-2.0 * v0 * v1).epsilon(1e-14));
}

TEST_CASE("lp_operator matches the discrete variational gradient at second order") {
  Rng rng(7);
  LPLagrangian sys = random_quadratic(2, 2, rng);
  oracle::AnalyticCurve cv = oracle::AnalyticCurve::random(2, 2, rng, V({0.1, -0.2}));
  std::vector<double> hs, errs;
  for (int N : {25, 50, 100, 200, 400}) {
    hs.push_back(1.0 / N);
    errs.push_back(oracle::variational_gap(sys, cv, 1.0, N));
  }
  const double slope = oracle::loglog_slope(hs, errs);
  CHECK(slope >= 1.8);
  CHECK(slope <= 2.2);
  CHECK(errs.back() < 1e-4);
}

TEST_CASE("lp_operator: the opposite omega sign is rejected by the variational oracle") {
  FlatBundleParams p;
  p.omega_strength = Eigen::Vector2d(1.5, -1.0);
  SystemRecord fb = flat_bundle_particle(p);
  LPLagrangian flipped = fb.lagrangian;
  SmoothMap om = fb.lagrangian.bundle.omega;
  flipped.bundle.omega = SmoothMap::make(2, 8, [om](const auto& q) {
    auto w = om.apply(q);
    for (auto& x : w) x = -1.0 * x;
    return w;
  });
  Rng rng(11);
  oracle::AnalyticCurve cv = oracle::AnalyticCurve::random(2, 2, rng, V({0.0, 0.0}));
  CHECK(oracle::variational_gap(fb.lagrangian, cv, 1.0, 200) < 1e-3);
  // Evaluating the flipped-omega operator against the original action leaves an O(1) gap.
  double gap = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    gap = std::max(gap, std::abs(oracle::discrete_gradient(fb.lagrangian, cv, 1.0, 200, dir) -
                                 oracle::continuum_pairing(flipped, cv, 1.0, dir)));
  }
  CHECK(gap > 1e-2);
}

TEST_CASE("accelerations: trivial quadratic gives zero") {
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(2), 2);
  SmoothMap L = SmoothMap::make(6, 1, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{0.5 * (x[2] * x[2] + x[3] * x[3] + x[4] * x[4] + x[5] * x[5])};
  });
  auto [qdd, vd] = accelerations({b, L}, {V({1, 2}), V({3, 4}), V({5, 6})});
  CHECK(max_abs(qdd) == 0.0);
  CHECK(max_abs(vd) == 0.0);
}

TEST_CASE("accelerations: random hyperregular systems annihilate the operator") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3, m = trial % 4;
    LPLagrangian sys = random_quadratic(n, m, rng);
    LPState s = random_state(sys, rng);
    auto [qdd, vd] = accelerations(sys, s);
    LPCovector op = lp_operator(sys, {s.q, s.qdot, qdd, s.v, vd});
    CHECK(op.norm() <= 1e-10);
  }
}

TEST_CASE("accelerations: flat bundle with omega = 0 is geodesic plus parallel transport") {
  FlatBundleParams p;
  p.omega = OmegaChoice::Zero;
  p.metric << 2.0, 0.3, 0.3, 1.0;
  SystemRecord fb = flat_bundle_particle(p);
  const LPState s{V({0.1, 0.7}), V({0.4, -0.9}), V({0.3, 1.1})};
  auto [qdd, vd] = accelerations(fb.lagrangian, s);
  // Geodesic right side of the conformal metric from hand-derived Christoffels.
  const double q2 = s.q[1];
  Eigen::Vector2d df(0.0, 2.0 * p.metric_bend * q2 / (1.0 + p.metric_bend * q2 * q2));
  Eigen::Vector2d u = s.qdot;
  Eigen::Vector2d geo = -(df.dot(u) * u - 0.5 * u.dot(p.metric * u) * (p.metric.inverse() * df));
  CHECK(max_abs(qdd - geo) <= 1e-12);
  // vdot = -Gamma(qdot) v = (theta / period) qdot^1 J v
  const double k = p.holonomy / p.period;
  Eigen::Vector2d Jv(-s.v[1], s.v[0]);
  CHECK(max_abs(vd - k * s.qdot[0] * Jv) <= 1e-14);
}

TEST_CASE("accelerations: singular Hessian is reported") {
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(1), 1);
  SmoothMap L = SmoothMap::make(3, 1, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{0.5 * x[1] * x[1] + x[2]};
  });
  CHECK_THROWS_AS(accelerations({b, L}, {V({0}), V({1}), V({1})}), SingularHessian);
}

TEST_CASE("integrate_lp: free particle moves on straight lines") {
  SystemRecord fp = free_particle(2);
  Trajectory tr = integrate_lp(fp.lagrangian, fp.initial, 0.0, 1.0, 0.01);
  REQUIRE(tr.states.size() == 101);
  CHECK(tr.times.back() == 1.0);
  for (size_t k = 0; k < tr.states.size(); ++k) {
    Eigen::VectorXd expect = fp.initial.q + tr.times[k] * fp.initial.qdot;
    CHECK(max_abs(tr.states[k].q - expect) <= 1e-14);
  }
}

TEST_CASE("integrate_lp: rk4 step halving shows fourth order") {
  SystemRecord fb = flat_bundle_particle();
  auto final_state = [&](double h) { return pack(integrate_lp(fb.lagrangian, fb.initial, 0.0, 1.0, h).states.back()); };
  const Eigen::VectorXd y1 = final_state(0.04), y2 = final_state(0.02), y3 = final_state(0.01);
  const double order = std::log2((y1 - y2).norm() / (y2 - y3).norm());
  CHECK(order > 3.7);
  CHECK(order < 4.3);
  const auto e1 = pack(integrate_lp(fb.lagrangian, fb.initial, 0.0, 1.0, 0.02, Method::Euler).states.back());
  const auto e2 = pack(integrate_lp(fb.lagrangian, fb.initial, 0.0, 1.0, 0.01, Method::Euler).states.back());
  const auto e3 = pack(integrate_lp(fb.lagrangian, fb.initial, 0.0, 1.0, 0.005, Method::Euler).states.back());
  const double eorder = std::log2((e1 - e2).norm() / (e2 - e3).norm());
  CHECK(eorder > 0.8);
  CHECK(eorder < 1.2);
}

TEST_CASE("integrate_lp: operator residual along the flow is small") {
  SystemRecord fb = flat_bundle_particle();
  Trajectory tr = integrate_lp(fb.lagrangian, fb.initial, 0.0, 1.0, 1e-3);
  double worst = 0.0;
  for (double r : trajectory_lp_residual(fb.lagrangian, tr)) worst = std::max(worst, r);
  CHECK(worst <= 1e-9);
}

TEST_CASE("integrate_lp: step adjustment, wrapping and chart exit") {
  SystemRecord fb = flat_bundle_particle();
  Trajectory tr = integrate_lp(fb.lagrangian, fb.initial, 0.0, 1.0, 0.3);
  CHECK(tr.states.size() == 5);
  CHECK(tr.step == doctest::Approx(0.25));
  LPState fast = fb.initial;
  fast.qdot = V({10.0, 0.0});
  fast.v = V({0.0, 0.0});
  Trajectory wrapped = integrate_lp(fb.lagrangian, fast, 0.0, 1.0, 1e-3);
  for (const auto& s : wrapped.states) {
    CHECK(s.q[0] >= -M_PI);
    CHECK(s.q[0] < M_PI);
  }
  LPBundleChart boxed = trivial_bundle(ChartDomain::box({-1}, {1}, {false}), 0);
  SmoothMap L = SmoothMap::make(2, 1, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{0.5 * x[1] * x[1]};
  });
  CHECK_THROWS_AS(integrate_lp({boxed, L}, {V({0.5}), V({1.0}), Eigen::VectorXd(0)}, 0.0, 1.0, 0.01), ChartViolation);
  CHECK_THROWS_AS(parse_method("leapfrog"), InvalidArgument);
}

TEST_CASE("energy: homogeneous and linear examples") {
  SystemRecord fp = free_particle(2);
  LPState s{V({0.3, 0.1}), V({1.0, 2.0}), Eigen::VectorXd(0)};
  CHECK(energy(fp.lagrangian, s) == doctest::Approx(2.5).epsilon(1e-15));
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(1), 1);
  SmoothMap L = SmoothMap::make(3, 1, [](const auto& x) {
    using T = scalar_of<decltype(x)>;
    return Vec<T>{2.0 * x[1] - 3.0 * x[2] + smath::sin(x[0])};
  });
  CHECK(energy({b, L}, {V({0.4}), V({0.0}), V({0.0})}) == doctest::Approx(-std::sin(0.4)).epsilon(1e-15));
}

TEST_CASE("energy is conserved by the flow") {
  for (const SystemRecord& sys : {flat_bundle_particle(), central_force_particle()}) {
    Trajectory tr = integrate_lp(sys.lagrangian, sys.initial, 0.0, 1.0, 1e-3);
    const double e0 = energy(sys.lagrangian, tr.states.front());
    double drift = 0.0;
    for (const auto& s : tr.states) drift = std::max(drift, std::abs(energy(sys.lagrangian, s) - e0));
    CHECK(drift <= 1e-8);
  }
}

TEST_CASE("noether_current: linearity, linear and angular momentum") {
  SystemRecord fp = free_particle(2);
  LPState s{V({0.3, -0.6}), V({1.5, 0.25}), Eigen::VectorXd(0)};
  CHECK(noether_current(fp.lagrangian, *fp.action, s, V({0, 0})) == 0.0);
  CHECK(noether_current(fp.lagrangian, *fp.action, s, V({1, 0})) == 1.5);
  SystemRecord cf = central_force_particle();
  const double lz = s.q[0] * s.qdot[1] - s.q[1] * s.qdot[0];
  CHECK(noether_current(cf.lagrangian, *cf.action, s, V({1})) == doctest::Approx(lz).epsilon(1e-15));
  CHECK(noether_current(cf.lagrangian, *cf.action, s, V({-2})) == doctest::Approx(-2 * lz).epsilon(1e-15));
}

TEST_CASE("noether: currents conserved without fiber") {
  for (const SystemRecord& sys : {central_force_particle(), free_particle(2)}) {
    Trajectory tr = integrate_lp(sys.lagrangian, sys.initial, 0.0, 1.0, 1e-3);
    for (int a = 0; a < sys.action->dim; ++a) {
      Eigen::VectorXd eta = Eigen::VectorXd::Unit(sys.action->dim, a);
      const double j0 = noether_current(sys.lagrangian, *sys.action, tr.states.front(), eta);
      double dev = 0.0;
      for (const auto& s : tr.states) dev = std::max(dev, std::abs(noether_current(sys.lagrangian, *sys.action, s, eta) - j0));
      CHECK(dev <= 1e-6);
      NoetherSeries ns = noether_drift_residual(sys.lagrangian, *sys.action, tr, eta);
      CHECK(ns.max_abs_residual() <= 1e-6);
    }
  }
}

TEST_CASE("noether: flat bundle current drifts as predicted") {
  SystemRecord fb = flat_bundle_particle();
  Trajectory tr = integrate_lp(fb.lagrangian, fb.initial, 0.0, 1.0, 1e-3);
  NoetherSeries ns = noether_drift_residual(fb.lagrangian, *fb.action, tr, V({1}));
  CHECK(ns.max_abs_dJdt() >= 1e-2);
  CHECK(ns.max_abs_residual() <= 1e-6);
  CHECK(ns.times.size() == tr.times.size() - 4);
  // Independent hand formula: dJ/dt = mu_a omega^a_{12} qdot^2 with mu = 2 h v.
  const LPState& s = tr.states[500];
  const double f = 1.0 + 0.25 * s.q[1] * s.q[1];
  const double hand = 2.0 * (0.4 * s.v[0] - 0.3 * s.v[1]) * f * s.qdot[1];
  CHECK(noether_drift_rhs(fb.lagrangian, *fb.action, s, V({1})) == doctest::Approx(hand).epsilon(1e-13));
}

TEST_CASE("noether: series needs five uniform samples") {
  SystemRecord fp = free_particle(1);
  Trajectory tr = integrate_lp(fp.lagrangian, fp.initial, 0.0, 1.0, 0.3);
  tr.times.resize(4);
  tr.states.resize(4);
  CHECK_THROWS_AS(noether_drift_residual(fp.lagrangian, *fp.action, tr, V({1})), InvalidArgument);
}

TEST_CASE("invariance_residual examples") {
  SystemRecord cf = central_force_particle();
  InvarianceCheck ic = check_invariance(cf.lagrangian, *cf.action, 50, 5);
  CHECK(ic.max_residual <= 1e-12);
  SystemRecord fb = flat_bundle_particle();
  CHECK(check_invariance(fb.lagrangian, *fb.action, 50, 5).max_residual <= 1e-12);
  LPBundleChart b = trivial_bundle(ChartDomain::euclidean(2), 0);
  SmoothMap L = SmoothMap::make(4, 1, [](const auto& x) { return Vec<scalar_of<decltype(x)>>{x[0]}; });
  SystemRecord fp = free_particle(2);
  CHECK(invariance_residual({b, L}, *fp.action, {V({0.2, 0.4}), V({1, 1}), Eigen::VectorXd(0)}, V({1, 0})) == 1.0);
}

TEST_CASE("fiber part scales with the fiber momentum") {
  auto make = [](double scale) {
    LPBundleChart b = trivial_bundle(ChartDomain::euclidean(1), 2);
    b.bracket = constant_map(1, V({0, 1, -1, 0, 0, 0.5, -0.5, 0}));
    b.gamma = constant_map(1, V({0.2, 0.1, -0.3, 0.4}));
    SmoothMap L = SmoothMap::make(4, 1, [scale](const auto& x) {
      using T = scalar_of<decltype(x)>;
      return Vec<T>{0.5 * x[1] * x[1] + scale * (x[2] * x[2] + 0.5 * x[2] * x[3] + x[3] * x[3])};
    });
    return LPLagrangian{b, L};
  };
  LPState2 s2{V({0.3}), V({0.7}), V({0.1}), V({0.4, -1.2}), V({0.25, 0.5})};
  const Eigen::VectorXd f1 = lp_operator(make(1.0), s2).fiber;
  const Eigen::VectorXd f2 = lp_operator(make(2.0), s2).fiber;
  CHECK(max_abs(f2 - 2.0 * f1) <= 1e-14);
}

TEST_CASE("trajectory_csv header and precision") {
  SystemRecord fb = flat_bundle_particle();
  Trajectory tr = integrate_lp(fb.lagrangian, fb.initial, 0.0, 0.1, 0.05);
  const std::string csv = trajectory_csv(tr);
  CHECK(csv.rfind("t,q1,q2,qd1,qd2,v1,v2\n", 0) == 0);
  CHECK(csv.find("\n0,0.20000000000000001,0.29999999999999999,") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
