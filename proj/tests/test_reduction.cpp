#include <cmath>

#include "doctest.h"
#include "lpmech/errors.hpp"
#include "lpmech/reduction.hpp"
#include "lpmech/systems.hpp"

using namespace lpmech;

namespace {

Eigen::VectorXd V(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd normal_vec(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

/// SO(3) over R^2 with A_i(x) = offset_i + slope_i x, optionally with a W.
PrincipalScenario so3_over_plane(const std::string& rep) {
  Eigen::VectorXd off = V({0.2, -0.1, 0.3, 0.05, 0.15, -0.25});
  Eigen::MatrixXd sl(6, 2);
  sl << 0.3, -0.2, 0.1, 0.4, -0.3, 0.2, 0.25, 0.1, -0.15, 0.3, 0.2, -0.1;
  return make_scenario("so3_plane", ChartDomain::euclidean(2), MatrixLieGroup::so3(), affine_connection(2, 3, off, sl),
                       rep);
}

/// Torus fiber over R^2 with A_1 = -s x2 / 2, A_2 = s x1 / 2, so dA = s dx1 ^ dx2.
PrincipalScenario torus_monopole(double s) {
  Eigen::MatrixXd sl(2, 2);
  sl << 0.0, -0.5 * s, 0.5 * s, 0.0;
  return make_scenario("torus", ChartDomain::euclidean(2), MatrixLieGroup::abelian(1, true),
                       affine_connection(2, 1, Eigen::VectorXd::Zero(2), sl));
}

/// Invariant Lagrangian on R^2 x SO(3) x R^3 (vector rep):
///   1/2 (1 + 0.1|x|^2)|xdot|^2 - 0.2 x1^2 + 1/2 <I Om, Om> + 1/2 <K a, a> + 0.1 <a, Om>
/// with Om = vee(g^T gdot) - A(x) xdot and a = g^T w.
SmoothMap plane_so3_lagrangian(const PrincipalScenario& sc) {
  const SmoothMap A = sc.connection;
  return SmoothMap::make(25, 1, [A](const auto& z) {
    using T = scalar_of<decltype(z)>;
    Vec<T> x{z[0], z[1]};
    auto gt = [&](size_t off, int i, int j) {  // (g^T h)_{ij} with h at offset off
      T s(0.0);
      for (int l = 0; l < 3; ++l) s += z[4 + static_cast<size_t>(l) * 3 + i] * z[off + static_cast<size_t>(l) * 3 + j];
      return s;
    };
    Vec<T> Av = A.apply(x);
    Vec<T> om{0.5 * (gt(13, 2, 1) - gt(13, 1, 2)), 0.5 * (gt(13, 0, 2) - gt(13, 2, 0)),
              0.5 * (gt(13, 1, 0) - gt(13, 0, 1))};
    for (int g = 0; g < 3; ++g) om[g] = om[g] - (Av[g] * z[2] + Av[3 + g] * z[3]);
    Vec<T> a(3, T(0.0));
    for (int i = 0; i < 3; ++i) {
      for (int l = 0; l < 3; ++l) a[i] += z[4 + static_cast<size_t>(l) * 3 + i] * z[22 + l];
    }
    const double I[3] = {1.0, 1.4, 0.8};
    const double K[3] = {0.9, 1.1, 1.6};
    T e = 0.5 * (1.0 + 0.1 * (x[0] * x[0] + x[1] * x[1])) * (z[2] * z[2] + z[3] * z[3]) - 0.2 * x[0] * x[0];
    for (int g = 0; g < 3; ++g) e += 0.5 * I[g] * om[g] * om[g] + 0.5 * K[g] * a[g] * a[g] + 0.1 * a[g] * om[g];
    return Vec<T>{e};
  });
}

}  // namespace

TEST_CASE("curvature_form examples") {
  PrincipalScenario flat = make_scenario("zero", ChartDomain::euclidean(2), MatrixLieGroup::so3());
  CHECK(max_abs(curvature_form(flat, V({0.3, -0.2}))) == 0.0);

  PrincipalScenario ab = make_scenario("abelian", ChartDomain::euclidean(2), MatrixLieGroup::abelian(2),
                                       constant_map(2, V({0.3, -1.0, 2.0, 0.5})));
  CHECK(max_abs(curvature_form(ab, V({0.4, 1.1}))) == 0.0);

  // Finite-difference dA plus the commutator term as oracle.
  PrincipalScenario sc = so3_over_plane("none");
  const Eigen::VectorXd x = V({0.35, -0.6});
  Eigen::MatrixXd J = fd_jacobian(sc.connection, x, 1e-5);
  Eigen::VectorXd A = eval(sc.connection, x);
  Eigen::VectorXd B = curvature_form(sc, x);
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd com = ad(sc.group, A.segment(3 * i, 3), A.segment(3 * j, 3));
      for (int g = 0; g < 3; ++g) {
        const double ref = J(j * 3 + g, i) - J(i * 3 + g, j) + com[g];
        worst = std::max(worst, std::abs(B[(g * 2 + i) * 2 + j] - ref));
      }
    }
  }
  CHECK(worst <= 1e-8);
  for (int g = 0; g < 3; ++g) CHECK(B[(g * 2 + 0) * 2 + 1] == doctest::Approx(-B[(g * 2 + 1) * 2 + 0]));
}

TEST_CASE("build_reduced_bundle: point-base SO(3) gives the Euler-Poincare data") {
  PrincipalScenario sc = make_scenario("so3", ChartDomain::euclidean(0), MatrixLieGroup::so3());
  ReducedBundleHandle h = build_reduced_bundle(sc);
  CHECK(h.report.all_passed());
  CHECK(h.bundle.n() == 0);
  CHECK(h.bundle.m == 3);
  Vec<double> c = h.bundle.bracket.apply(Vec<double>{});
  // [e0, e1] = e2 and cyclic.
  CHECK(c[(2 * 3 + 0) * 3 + 1] == doctest::Approx(1.0));
  CHECK(c[(0 * 3 + 1) * 3 + 2] == doctest::Approx(1.0));
  CHECK(c[(1 * 3 + 2) * 3 + 0] == doctest::Approx(1.0));
  CHECK(c[(2 * 3 + 1) * 3 + 0] == doctest::Approx(-1.0));
}

TEST_CASE("build_reduced_bundle: torus with curvature gives a flat-type bundle with closed omega") {
  const double s = 0.7;
  PrincipalScenario sc = torus_monopole(s);
  ReducedBundleHandle h = build_reduced_bundle(sc);
  CHECK(h.report.all_passed());
  Vec<double> x{0.3, -0.8};
  Vec<double> om = h.bundle.omega.apply(x);
  Vec<double> br = h.bundle.bracket.apply(x);
  Vec<double> gm = h.bundle.gamma.apply(x);
  // omega = -dA, bracket and Gamma vanish because the adjoint action is trivial.
  CHECK(om[1] == doctest::Approx(-s));
  CHECK(om[2] == doctest::Approx(s));
  for (double b : br) CHECK(b == 0.0);
  for (double g : gm) CHECK(g == 0.0);
}

TEST_CASE("build_reduced_bundle: semidirect and advected fibers pass the axioms") {
  for (const char* rep : {"vector", "dual", "dual_plus_vector", "trivial"}) {
    CAPTURE(rep);
    ReducedBundleHandle h = build_reduced_bundle(so3_over_plane(rep));
    CHECK(h.report.all_passed());
    for (const auto& c : h.report.conditions) CHECK(c.max_residual <= 1e-8 * (1.0 + c.scale));
  }
  ReducedBundleHandle h = build_reduced_bundle(so3_over_plane("vector"));
  // Semidirect bracket: [e_a, w_r] = e_a x w_r.
  Vec<double> c = h.bundle.bracket.apply(Vec<double>{0.0, 0.0});
  const int m = 6;
  CHECK(c[((3 + 2) * m + 0) * m + 3 + 1] == doctest::Approx(1.0));
  CHECK(c[((3 + 2) * m + 3 + 1) * m + 0] == doctest::Approx(-1.0));
}

TEST_CASE("build_reduced_bundle rejects inconsistent data through the axiom check") {
  // Flipping the omega sign breaks curvature_omega; detected, so the builder throws.
  PrincipalScenario sc = so3_over_plane("none");
  LPBundleChart b = reduced_bundle_chart(sc);
  SmoothMap om = b.omega;
  b.omega = SmoothMap::make<2>(2, 12, [om](const auto& x) {
    auto v = om.apply(x);
    for (auto& e : v) e = -e;
    return v;
  });
  AxiomReport r = check_axioms(b, 50, 3);
  CHECK_FALSE(r.all_passed());
  CHECK_FALSE(r.find("curvature_omega")->passed);
}

TEST_CASE("scenario validation") {
  PrincipalScenario sc = so3_over_plane("vector");
  sc.connection = zero_connection(3, 3);
  CHECK_THROWS_AS(sc.validate(), DimensionMismatch);
  PrincipalScenario bad = so3_over_plane("vector");
  bad.rep.generators[0] *= 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(make_scenario("h", ChartDomain::euclidean(0), MatrixLieGroup::heisenberg(), {}, "vector"),
                  InvalidArgument);
}

TEST_CASE("alpha_map examples") {
  PrincipalScenario sc = so3_over_plane("vector");
  UnreducedPoint p{V({0.1, 0.2}), V({0.0, 0.0}), Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Zero(), V({1, 2, 3})};
  LPState s = alpha_map(sc, p);
  CHECK(max_abs(s.v.head(3)) == 0.0);
  CHECK(max_abs(s.v.tail(3) - V({1, 2, 3})) <= 1e-15);

  PrincipalScenario pt = make_scenario("so3", ChartDomain::euclidean(0), MatrixLieGroup::so3());
  const MatrixLieGroup& G = pt.group;
  Eigen::MatrixXd g = G.exp(V({0.3, -0.5, 0.8}));
  Eigen::VectorXd xi = V({0.2, 0.7, -0.4});
  UnreducedPoint q{Eigen::VectorXd(0), Eigen::VectorXd(0), g, g * G.hat(xi), Eigen::VectorXd(0)};
  CHECK(max_abs(alpha_map(pt, q).v - xi) <= 1e-14);

  CHECK_THROWS_AS(alpha_map(pt, UnreducedPoint{Eigen::VectorXd(0), Eigen::VectorXd(0), 2.0 * g, g, Eigen::VectorXd(0)}),
                  InvalidArgument);
}

TEST_CASE("alpha_map round trip") {
  Rng rng(5);
  for (const char* rep : {"vector", "dual_plus_vector"}) {
    PrincipalScenario sc = so3_over_plane(rep);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      LPState r{normal_vec(2, rng), normal_vec(2, rng), normal_vec(3 + sc.w(), rng)};
      Eigen::MatrixXd g = sc.group.exp(normal_vec(3, rng));
      UnreducedPoint p = alpha_inverse(sc, r, g);
      LPState back = alpha_map(sc, p);
      worst = std::max(worst, max_abs(back.v - r.v));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("reduce_lagrangian examples") {
  // G-independent Lagrangian: the fiber slots are ignored.
  PrincipalScenario sc = so3_over_plane("none");
  SmoothMap Lx = SmoothMap::make(22, 1, [](const auto& z) {
    using T = scalar_of<decltype(z)>;
    return Vec<T>{0.5 * (z[2] * z[2] + z[3] * z[3]) - z[0] * z[1]};
  });
  LPLagrangian red = reduce_lagrangian(sc, Lx);
  Eigen::VectorXd p = V({0.3, 0.4, 1.0, -2.0, 5.0, 6.0, 7.0});
  CHECK(eval(red.L, p)[0] == doctest::Approx(0.5 * 5.0 - 0.12));

  // Rigid body: the reduced Lagrangian is the same quadratic on so(3).
  SystemRecord rb = rigid_body();
  Eigen::VectorXd xi = V({0.3, -0.7, 1.1});
  CHECK(eval(rb.lagrangian.L, xi)[0] == doctest::Approx(0.5 * (1.0 * 0.09 + 2.0 * 0.49 + 3.0 * 1.21)));

  // A Lagrangian that sees g itself is rejected.
  SmoothMap Lbad = SmoothMap::make(22, 1, [](const auto& z) {
    using T = scalar_of<decltype(z)>;
    return Vec<T>{z[4] + 0.5 * z[14] * z[14]};
  });
  CHECK_THROWS_AS(reduce_lagrangian(sc, Lbad), InvarianceViolation);
  CHECK_THROWS_AS(reduce_lagrangian(sc, rb.scenario->unreduced), DimensionMismatch);
}

TEST_CASE("heavy-top reduced Lagrangian") {
  HeavyTopParams hp;
  SystemRecord ht = parameter_lagrangian(hp);
  Eigen::VectorXd v = V({0.3, -0.7, 1.1, 0.2, 0.1, 0.9, -0.4, 0.5, 0.3});
  const Eigen::Vector3d xi = v.head(3), a = v.segment(3, 3), b = v.tail(3);
  const double ref = 0.5 * xi.dot(hp.inertia.cwiseProduct(xi)) - a.dot(hp.chi) + a.dot(b);
  CHECK(eval(ht.lagrangian.L, v)[0] == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("diamond examples") {
  MatrixLieGroup so3 = MatrixLieGroup::so3();
  Representation triv = so3.representation("trivial");
  CHECK(max_abs(diamond(triv, V({2.0}), V({3.0}))) == 0.0);
  Representation ab = MatrixLieGroup::abelian(2).representation("trivial");
  CHECK(max_abs(diamond(ab, V({1.0}), V({1.0}))) == 0.0);

  // Vector representation: b <> a = b x a, checked on all basis triples against
  // the pairing <b <> a, eta> = -<rho*'(eta) a, b> with rho*' = -rho'^T.
  Representation vrep = so3.representation("vector");
  double worst = 0.0;
  for (int al = 0; al < 3; ++al) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        Eigen::Vector3d b = Eigen::Vector3d::Unit(i), a = Eigen::Vector3d::Unit(j);
        Eigen::VectorXd d = diamond(vrep, b, a);
        const Eigen::MatrixXd dual_gen = -vrep.generators[al].transpose();
        const double pairing = -(dual_gen * a).dot(b);
        worst = std::max(worst, std::abs(d[al] - pairing));
        worst = std::max(worst, std::abs(d[al] - b.cross(a)[al]));
      }
    }
  }
  CHECK(worst == 0.0);
}

TEST_CASE("projected unreduced flow satisfies the reduced equations and reconstructs") {
  PrincipalScenario sc = so3_over_plane("vector");
  SmoothMap L = plane_so3_lagrangian(sc);
  LPLagrangian red = reduce_lagrangian(sc, L);
  LPLagrangian chart = exp_chart_system(sc, L);
  LPState c0{V({0.1, -0.2, 0.05, 0.1, -0.05}), V({0.4, 0.3, 0.6, -0.5, 0.8}), V({0.3, -0.2, 0.5})};
  Trajectory ct = integrate_lp(chart, c0, 0.0, 0.5, 1e-3);
  GroupTrajectory gt = chart_to_group(sc, ct);
  Trajectory proj = project_trajectory(sc, gt);
  std::vector<double> res = trajectory_lp_residual(red, proj);
  double worst = 0.0;
  for (double r : res) worst = std::max(worst, r);
  CHECK(worst <= 1e-5);

  Reconstruction rec = integrate_reconstructed(sc, red, proj.states.front(), gt.points.front().g, 0.0, 0.5, 1e-3);
  REQUIRE(rec.g.size() == gt.points.size());
  double gdev = 0.0, sdev = 0.0;
  for (size_t i = 0; i < rec.g.size(); ++i) {
    gdev = std::max(gdev, (rec.g[i] - gt.points[i].g).cwiseAbs().maxCoeff());
    sdev = std::max(sdev, max_abs(rec.reduced.states[i].v - proj.states[i].v));
    sdev = std::max(sdev, max_abs(rec.reduced.states[i].q - proj.states[i].q));
  }
  CHECK(gdev <= 1e-5);
  CHECK(sdev <= 1e-5);
}

TEST_CASE("project_trajectory examples") {
  PrincipalScenario sc = make_scenario("so3", ChartDomain::euclidean(0), MatrixLieGroup::so3());
  GroupTrajectory still;
  GroupTrajectory subgroup;
  const Eigen::VectorXd xi0 = V({0.3, -0.4, 0.2});
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.05 * i;
    still.times.push_back(t);
    still.points.push_back({Eigen::VectorXd(0), Eigen::VectorXd(0), sc.group.exp(V({0.1, 0.2, 0.3})),
                            Eigen::Matrix3d::Zero(), Eigen::VectorXd(0)});
    Eigen::MatrixXd g = sc.group.exp(t * xi0);
    subgroup.times.push_back(t);
    subgroup.points.push_back({Eigen::VectorXd(0), Eigen::VectorXd(0), g, g * sc.group.hat(xi0), Eigen::VectorXd(0)});
  }
  Trajectory a = project_trajectory(sc, still);
  Trajectory b = project_trajectory(sc, subgroup);
  CHECK(a.times == still.times);
  for (const auto& s : a.states) CHECK(max_abs(s.v) <= 1e-15);
  for (const auto& s : b.states) CHECK(max_abs(s.v - xi0) <= 1e-13);
}

TEST_CASE("exp-chart action is a symmetry and its current matches the reduced current") {
  PrincipalScenario sc = so3_over_plane("vector");
  SmoothMap L = plane_so3_lagrangian(sc);
  LPLagrangian chart = exp_chart_system(sc, L);
  LPLagrangian red = reduce_lagrangian(sc, L);
  GroupAction act = exp_chart_action(sc);
  InvarianceCheck ic = check_invariance(chart, act, 50, 17);
  CHECK(ic.max_residual <= 1e-10);

  Rng rng(23);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    LPState cs = random_state(chart, rng, 0.5);
    Eigen::VectorXd eta = normal_vec(3, rng);
    UnreducedPoint p = chart_to_point(sc, cs);
    const double J = noether_current(chart, act, cs, eta);
    const double j = reduced_noether(sc, red, alpha_map(sc, p), body_of_spatial(sc.group, p.g, eta));
    worst = std::max(worst, std::abs(J - j) / (1.0 + std::abs(J)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("chart and trivialized points convert both ways") {
  PrincipalScenario sc = so3_over_plane("vector");
  LPState cs{V({0.1, 0.2, 0.3, -0.2, 0.4}), V({1.0, -1.0, 0.5, 0.2, -0.3}), V({1, 2, 3})};
  LPState back = point_to_chart(sc, chart_to_point(sc, cs));
  CHECK(max_abs(back.q - cs.q) <= 1e-12);
  CHECK(max_abs(back.qdot - cs.qdot) <= 1e-12);
}

TEST_CASE("reduced_vertical_split partitions the fiber operator") {
  PrincipalScenario sc = so3_over_plane("vector");
  LPLagrangian red = reduce_lagrangian(sc, plane_so3_lagrangian(sc));
  Rng rng(31);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    LPState2 s2{normal_vec(2, rng), normal_vec(2, rng), normal_vec(2, rng), normal_vec(6, rng), normal_vec(6, rng)};
    VerticalSplit sp = reduced_vertical_split(sc, red, s2);
    LPCovector op = lp_operator(red, s2);
    Eigen::VectorXd cat(6);
    cat << sp.new_vertical, sp.inherited;
    worst = std::max(worst, max_abs(cat - op.fiber) / (1.0 + max_abs(op.fiber)));
  }
  CHECK(worst <= 1e-12);

  SystemRecord rb = rigid_body();
  LPState2 s2{Eigen::VectorXd(0), Eigen::VectorXd(0), Eigen::VectorXd(0), V({0.1, 0.2, 0.3}), V({0.5, 0.1, -0.2})};
  VerticalSplit sp = reduced_vertical_split(rb.scenario->scenario, rb.lagrangian, s2);
  CHECK(sp.inherited.size() == 0);
  CHECK(max_abs(sp.new_vertical - lp_operator(rb.lagrangian, s2).fiber) <= 1e-14);

  CHECK_THROWS_AS(reduced_vertical_split(rb.scenario->scenario, red, s2), InvalidArgument);
}

TEST_CASE("reduced_noether examples") {
  SystemRecord rb = rigid_body();
  const PrincipalScenario& sc = rb.scenario->scenario;
  LPState s{Eigen::VectorXd(0), Eigen::VectorXd(0), V({0.3, -0.5, 0.9})};
  CHECK(reduced_noether(sc, rb.lagrangian, s, Eigen::Vector3d::Zero()) == 0.0);
  const Eigen::Vector3d eta(0.2, 0.4, -0.1);
  const double ref = 1.0 * 0.3 * 0.2 + 2.0 * -0.5 * 0.4 + 3.0 * 0.9 * -0.1;
  CHECK(reduced_noether(sc, rb.lagrangian, s, eta) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("reduced current drift along the heavy top matches the new vertical equation") {
  SystemRecord ht = parameter_lagrangian();
  const PrincipalScenario& sc = ht.scenario->scenario;
  const double h = 1e-3;
  Reconstruction rec = integrate_reconstructed(sc, ht.lagrangian, ht.initial, ht.scenario->g0, 0.0, 1.0, h);
  const Eigen::Vector3d eta(0.3, -0.6, 0.8);
  std::vector<double> j(rec.g.size());
  for (size_t i = 0; i < rec.g.size(); ++i) {
    j[i] = reduced_noether(sc, ht.lagrangian, rec.reduced.states[i], body_of_spatial(sc.group, rec.g[i], eta));
  }
  double worst = 0.0, drift = 0.0, split = 0.0;
  const auto& st = rec.reduced.states;
  for (size_t i = 2; i + 2 < j.size(); ++i) {
    const double fd = (j[i - 2] - 8.0 * j[i - 1] + 8.0 * j[i + 1] - j[i + 2]) / (12.0 * h);
    const double rhs = reduced_noether_drift_rhs(sc, ht.lagrangian, st[i], body_of_spatial(sc.group, rec.g[i], eta));
    worst = std::max(worst, std::abs(fd - rhs));
    drift = std::max(drift, std::abs(fd));
    Eigen::VectorXd vdot = (st[i - 2].v - 8.0 * st[i - 1].v + 8.0 * st[i + 1].v - st[i + 2].v) / (12.0 * h);
    LPState2 s2{st[i].q, st[i].qdot, Eigen::VectorXd(0), st[i].v, vdot};
    split = std::max(split, max_abs(reduced_vertical_split(sc, ht.lagrangian, s2).new_vertical));
  }
  CHECK(drift >= 1e-2);
  CHECK(worst <= 1e-6);
  CHECK(split <= 1e-6);
}

TEST_CASE("stages: abelian group reshuffles coordinates exactly") {
  PrincipalScenario sc = make_scenario("plane", ChartDomain::euclidean(0), MatrixLieGroup::abelian(2));
  const Eigen::Matrix2d M = (Eigen::Matrix2d() << 2.0, 0.3, 0.3, 1.0).finished();
  SmoothMap L = SmoothMap::make(18, 1, [M](const auto& z) {
    using T = scalar_of<decltype(z)>;
    // g = [[1, 0, t0], [0, 1, t1], [0, 0, 1]], g^{-1} gdot = (t0dot, t1dot).
    const T a = z[9 + 2], b = z[9 + 5];
    return Vec<T>{0.5 * (M(0, 0) * a * a + 2.0 * M(0, 1) * a * b + M(1, 1) * b * b)};
  });
  StagesResult r = stages_reduce(sc, {0}, L);
  CHECK(r.structure_mismatch == 0.0);
  CHECK(r.lagrangian_mismatch <= 1e-14);
  CHECK(r.compatible);
  CHECK(r.beta(0, 1) == 1.0);
  CHECK(r.beta(1, 0) == 1.0);
  // Uncoupled linear flows: xi is constant in both reductions.
  Trajectory d = integrate_lp(r.direct_lagrangian, {Eigen::VectorXd(0), Eigen::VectorXd(0), V({0.4, -0.3})}, 0, 1, 1e-2);
  Trajectory s = integrate_lp(r.staged_lagrangian, {Eigen::VectorXd(0), Eigen::VectorXd(0), r.beta * V({0.4, -0.3})},
                              0, 1, 1e-2);
  CHECK(max_abs(d.states.back().v - V({0.4, -0.3})) <= 1e-12);
  CHECK(max_abs(s.states.back().v - r.beta * d.states.back().v) <= 1e-12);
}

TEST_CASE("stages: Heisenberg by its center") {
  SystemRecord hs = heisenberg_stages();
  const ScenarioData& sd = *hs.scenario;
  StagesResult r = stages_reduce(sd.scenario, sd.normal, sd.unreduced);
  CHECK(r.stage1.report.all_passed());
  CHECK(r.stage2_report.all_passed());
  CHECK(r.stage1.bundle.n() == 2);
  CHECK(r.stage1.bundle.m == 1);
  CHECK(r.structure_mismatch <= 1e-8);
  CHECK(r.lagrangian_mismatch <= 1e-10);
  CHECK(r.compatible);
  CHECK(r.compatibility_residual <= 1e-12);

  Trajectory d = integrate_lp(r.direct_lagrangian, hs.initial, 0.0, 1.0, 1e-3);
  LPState s0 = hs.initial;
  s0.v = r.beta * hs.initial.v;
  Trajectory s = integrate_lp(r.staged_lagrangian, s0, 0.0, 1.0, 1e-3);
  double dev = 0.0;
  for (size_t i = 0; i < d.states.size(); ++i) dev = std::max(dev, max_abs(r.beta * d.states[i].v - s.states[i].v));
  CHECK(dev <= 1e-6);
  CHECK(max_abs(d.states.back().v - hs.initial.v) >= 1e-3);
}

TEST_CASE("stages: incompatible connection is reported") {
  SystemRecord hs = heisenberg_stages();
  StagesOptions opt;
  opt.compatible = false;
  StagesResult r = stages_reduce(hs.scenario->scenario, hs.scenario->normal, hs.scenario->unreduced, opt);
  CHECK_FALSE(r.compatible);
  CHECK(r.compatibility_residual > 1e-6);
  CHECK(r.structure_mismatch > 1e-3);
}

TEST_CASE("stages_reduce preconditions") {
  SystemRecord hs = heisenberg_stages();
  const ScenarioData& sd = *hs.scenario;
  CHECK_THROWS_AS(stages_reduce(sd.scenario, {0}, sd.unreduced), NotNormal);
  CHECK_THROWS_AS(stages_reduce(sd.scenario, {3}, sd.unreduced), InvalidArgument);
  SystemRecord rb = rigid_body();
  CHECK_THROWS_AS(stages_reduce(rb.scenario->scenario, {2}, rb.scenario->unreduced), NotNormal);
  SystemRecord ht = parameter_lagrangian();
  CHECK_THROWS_AS(stages_reduce(ht.scenario->scenario, {2}, ht.scenario->unreduced), InvalidArgument);
}
