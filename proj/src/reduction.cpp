#include "lpmech/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lpmech/hamiltonian.hpp"

namespace lpmech {

namespace {

// ---- scalar-generic matrix helpers (row-major N x N) ----

Vec<double> flatten(const Eigen::MatrixXd& a) {
  Vec<double> out(static_cast<size_t>(a.rows() * a.cols()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[static_cast<size_t>(i * a.cols() + j)] = a(i, j);
  }
  return out;
}

Eigen::MatrixXd unflatten(const Vec<double>& v, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = v[static_cast<size_t>(i) * n + j];
  }
  return a;
}

struct GroupData {
  int k = 0;
  int n = 0;
  GroupKind kind = GroupKind::Abelian;
  Vec<double> c;
  Vec<Vec<double>> basis;  // flattened basis matrices
  Vec<double> basis_norm2;
  MatrixLieGroup group;

  explicit GroupData(const MatrixLieGroup& g)
      : k(g.dim()), n(g.matrix_size()), kind(g.kind()), c(g.structure()), group(g) {
    for (const auto& b : g.basis()) {
      basis.push_back(flatten(b));
      basis_norm2.push_back(b.squaredNorm());
    }
  }

  template <class T>
  Vec<T> hat(const Vec<T>& xi) const {
    Vec<T> out(static_cast<size_t>(n) * n, T(0.0));
    for (int a = 0; a < k; ++a) {
      for (size_t e = 0; e < out.size(); ++e) {
        if (basis[a][e] != 0.0) out[e] += basis[a][e] * xi[a];
      }
    }
    return out;
  }

  template <class T>
  Vec<T> vee(const Vec<T>& m) const {
    Vec<T> xi(k, T(0.0));
    for (int a = 0; a < k; ++a) {
      for (size_t e = 0; e < m.size(); ++e) {
        if (basis[a][e] != 0.0) xi[a] += basis[a][e] * m[e];
      }
      xi[a] = xi[a] / basis_norm2[a];
    }
    return xi;
  }

  template <class T, class U>
  Vec<T> matmul(const Vec<T>& a, const Vec<U>& b) const {
    Vec<T> out(static_cast<size_t>(n) * n, T(0.0));
    for (int i = 0; i < n; ++i) {
      for (int l = 0; l < n; ++l) {
        const T& ail = a[static_cast<size_t>(i) * n + l];
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += ail * b[static_cast<size_t>(l) * n + j];
      }
    }
    return out;
  }

  /// g^{-1} d/dt exp(theta) for thetadot.
  template <class T>
  Vec<T> body_velocity(const Vec<T>& theta, const Vec<T>& thetadot) const {
    if (kind == GroupKind::SO3) {
      auto b = so3_body_velocity_t(theta[0], theta[1], theta[2], thetadot[0], thetadot[1], thetadot[2]);
      return {b[0], b[1], b[2]};
    }
    // Nilpotent and abelian algebras: the series terminates.
    return dexp_series_t(c, k, theta, thetadot, -1.0, k + 2);
  }
};

template <class T>
Vec<T> connection_apply(const Vec<T>& A, int d, int k, const Vec<T>& xdot) {
  Vec<T> out(k, T(0.0));
  for (int i = 0; i < d; ++i) {
    for (int g = 0; g < k; ++g) out[g] += A[static_cast<size_t>(i) * k + g] * xdot[i];
  }
  return out;
}

Eigen::VectorXd connection_apply(const PrincipalScenario& sc, const Eigen::VectorXd& x, const Eigen::VectorXd& xdot) {
  Vec<double> A = sc.connection.apply(to_vec(x));
  return to_eigen(connection_apply(A, sc.d(), sc.k(), to_vec(xdot)));
}

Eigen::VectorXd pack_unreduced(const UnreducedPoint& p) {
  const Eigen::Index len = 2 * p.x.size() + 2 * p.g.size() + p.w.size();
  Eigen::VectorXd z(len);
  Vec<double> g = flatten(p.g);
  Vec<double> gd = flatten(p.gdot);
  Eigen::Index o = 0;
  z.segment(o, p.x.size()) = p.x;
  o += p.x.size();
  z.segment(o, p.xdot.size()) = p.xdot;
  o += p.xdot.size();
  for (double e : g) z[o++] = e;
  for (double e : gd) z[o++] = e;
  z.segment(o, p.w.size()) = p.w;
  return z;
}

/// Random element within a safe radius of the identity's chart.
Eigen::MatrixXd random_element(const MatrixLieGroup& g, Rng& rng) {
  Eigen::VectorXd xi(g.dim());
  for (int a = 0; a < g.dim(); ++a) xi[a] = rng.normal();
  const double bound = g.injectivity_bound();
  if (std::isfinite(bound) && xi.norm() > 0.9 * bound) xi *= 0.9 * bound / xi.norm();
  return g.exp(xi);
}

Eigen::VectorXd normal_vector(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

std::string axiom_failures(const AxiomReport& r) {
  std::string out;
  for (const auto& c : r.conditions) {
    if (!c.passed) out += " " + c.name + "=" + std::to_string(c.max_residual);
  }
  return out;
}

}  // namespace

// ---------------- scenario ----------------

void PrincipalScenario::validate() const {
  base.validate();
  const int dd = d();
  const int kk = k();
  if (!connection.valid()) throw InvalidArgument("scenario '" + name + "': missing connection");
  if (connection.in_dim() != dd || connection.out_dim() != dd * kk) {
    throw DimensionMismatch("scenario '" + name + "': connection must map R^" + std::to_string(dd) + " to R^" +
                            std::to_string(dd * kk));
  }
  if (rep.dim == 0) return;
  if (static_cast<int>(rep.generators.size()) != kk) {
    throw DimensionMismatch("scenario '" + name + "': representation needs one generator per algebra direction");
  }
  for (const auto& gen : rep.generators) {
    if (gen.rows() != rep.dim || gen.cols() != rep.dim) {
      throw DimensionMismatch("scenario '" + name + "': generator shape mismatch");
    }
  }
  const Vec<double>& c = group.structure();
  for (int a = 0; a < kk; ++a) {
    for (int b = 0; b < kk; ++b) {
      Eigen::MatrixXd lhs = rep.generators[a] * rep.generators[b] - rep.generators[b] * rep.generators[a];
      for (int g = 0; g < kk; ++g) lhs -= c[(static_cast<size_t>(g) * kk + a) * kk + b] * rep.generators[g];
      if (lhs.cwiseAbs().maxCoeff() > 1e-10) {
        throw InvalidArgument("scenario '" + name + "': representation generators do not close under the bracket");
      }
    }
  }
}

SmoothMap zero_connection(int d, int k) { return constant_map(d, Eigen::VectorXd::Zero(d * k)); }

SmoothMap affine_connection(int d, int k, const Eigen::VectorXd& offset, const Eigen::MatrixXd& slope) {
  if (offset.size() != d * k || slope.rows() != d * k || slope.cols() != d) {
    throw DimensionMismatch("affine_connection: expected offset of length d*k and a (d*k) x d slope");
  }
  Vec<double> off = to_vec(offset);
  Vec<double> sl(static_cast<size_t>(d * k * d));
  for (int r = 0; r < d * k; ++r) {
    for (int j = 0; j < d; ++j) sl[static_cast<size_t>(r) * d + j] = slope(r, j);
  }
  const int rows = d * k;
  return SmoothMap::make<3>(d, rows, [off, sl, rows, d](const auto& x) {
    using T = scalar_of<decltype(x)>;
    Vec<T> out(rows, T(0.0));
    for (int r = 0; r < rows; ++r) {
      out[r] = T(off[r]);
      for (int j = 0; j < d; ++j) out[r] += sl[static_cast<size_t>(r) * d + j] * x[j];
    }
    return out;
  });
}

PrincipalScenario make_scenario(std::string name, ChartDomain base, MatrixLieGroup group, SmoothMap connection,
                                const std::string& rep) {
  PrincipalScenario sc;
  sc.name = std::move(name);
  sc.base = std::move(base);
  sc.group = std::move(group);
  sc.connection = connection.valid() ? std::move(connection) : zero_connection(sc.base.n, sc.group.dim());
  sc.rep = sc.group.representation(rep);
  sc.validate();
  return sc;
}

Eigen::VectorXd curvature_form(const PrincipalScenario& sc, const Eigen::VectorXd& x) {
  sc.validate();
  if (x.size() != sc.d()) throw DimensionMismatch("curvature_form: base point length mismatch");
  sc.base.check(x);
  const int d = sc.d();
  const int k = sc.k();
  const Vec<double>& c = sc.group.structure();
  Vec<double> xv = to_vec(x);
  Vec<double> A = sc.connection.apply(xv);
  Vec<double> J = jacobian_t(sc.connection, xv);  // row i*k + g, column j: d_j A_i^g
  Eigen::VectorXd B = Eigen::VectorXd::Zero(k * d * d);
  for (int g = 0; g < k; ++g) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        double v = J[(static_cast<size_t>(j) * k + g) * d + i] - J[(static_cast<size_t>(i) * k + g) * d + j];
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) {
            v += c[(static_cast<size_t>(g) * k + a) * k + b] * A[static_cast<size_t>(i) * k + a] *
                 A[static_cast<size_t>(j) * k + b];
          }
        }
        B[(g * d + i) * d + j] = v;
      }
    }
  }
  return B;
}

// ---------------- reduced bundle ----------------

LPBundleChart reduced_bundle_chart(const PrincipalScenario& sc) {
  sc.validate();
  const int d = sc.d();
  const int k = sc.k();
  const int w = sc.w();
  const int m = k + w;
  const Vec<double> c = sc.group.structure();
  // gens[(g*w + p)*w + r] = rho'(e_g)_{pr}
  Vec<double> gens(static_cast<size_t>(k) * w * w, 0.0);
  for (int g = 0; g < k && w > 0; ++g) {
    for (int p = 0; p < w; ++p) {
      for (int r = 0; r < w; ++r) gens[(static_cast<size_t>(g) * w + p) * w + r] = sc.rep.generators[g](p, r);
    }
  }
  const SmoothMap conn = sc.connection;

  LPBundleChart b;
  b.base = sc.base;
  b.m = m;
  b.name = sc.name + "/reduced";

  b.gamma = SmoothMap::make<3>(d, d * m * m, [conn, c, gens, d, k, w, m](const auto& x) {
    using T = scalar_of<decltype(x)>;
    Vec<T> A = conn.apply(x);
    Vec<T> out(static_cast<size_t>(d) * m * m, T(0.0));
    for (int i = 0; i < d; ++i) {
      for (int g = 0; g < k; ++g) {
        const T& aig = A[static_cast<size_t>(i) * k + g];
        for (int a = 0; a < k; ++a) {
          for (int bb = 0; bb < k; ++bb) {
            const double cc = c[(static_cast<size_t>(a) * k + g) * k + bb];
            if (cc != 0.0) out[(static_cast<size_t>(i) * m + a) * m + bb] += cc * aig;
          }
        }
        for (int p = 0; p < w; ++p) {
          for (int r = 0; r < w; ++r) {
            const double gg = gens[(static_cast<size_t>(g) * w + p) * w + r];
            if (gg != 0.0) out[(static_cast<size_t>(i) * m + k + p) * m + k + r] += gg * aig;
          }
        }
      }
    }
    return out;
  });

  Eigen::VectorXd br = Eigen::VectorXd::Zero(m * m * m);
  for (int g = 0; g < k; ++g) {
    for (int a = 0; a < k; ++a) {
      for (int bb = 0; bb < k; ++bb) br[(g * m + a) * m + bb] = c[(static_cast<size_t>(g) * k + a) * k + bb];
    }
  }
  for (int a = 0; a < k; ++a) {
    for (int p = 0; p < w; ++p) {
      for (int r = 0; r < w; ++r) {
        const double gg = gens[(static_cast<size_t>(a) * w + p) * w + r];
        br[((k + p) * m + a) * m + k + r] += gg;
        br[((k + p) * m + k + r) * m + a] -= gg;
      }
    }
  }
  b.bracket = constant_map(d, br);

  b.omega = SmoothMap::make<2>(d, m * d * d, [conn, c, d, k, m](const auto& x) {
    using T = scalar_of<decltype(x)>;
    Vec<T> A = conn.apply(x);
    Vec<T> J = jacobian_t(conn, x);
    Vec<T> out(static_cast<size_t>(m) * d * d, T(0.0));
    for (int g = 0; g < k; ++g) {
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          T v = J[(static_cast<size_t>(j) * k + g) * d + i] - J[(static_cast<size_t>(i) * k + g) * d + j];
          for (int a = 0; a < k; ++a) {
            for (int bb = 0; bb < k; ++bb) {
              const double cc = c[(static_cast<size_t>(g) * k + a) * k + bb];
              if (cc != 0.0) v += cc * (A[static_cast<size_t>(i) * k + a] * A[static_cast<size_t>(j) * k + bb]);
            }
          }
          out[(static_cast<size_t>(g) * d + i) * d + j] = -v;
        }
      }
    }
    return out;
  });
  b.validate();
  return b;
}

ReducedBundleHandle build_reduced_bundle(const PrincipalScenario& sc, int n_samples, std::uint64_t seed, double tol) {
  ReducedBundleHandle h;
  h.bundle = reduced_bundle_chart(sc);
  h.scenario = sc;
  h.formulas =
      "Gamma = ad(A) on the algebra block and rho'(A) on W; omega = -(dA + [A, A]) on the algebra block; "
      "bracket = algebra bracket (+) (rho'(xi1) w2 - rho'(xi2) w1)";
  h.report = check_axioms(h.bundle, n_samples, seed, tol);
  if (!h.report.all_passed()) {
    throw AxiomViolation("reduced bundle '" + h.bundle.name + "' fails:" + axiom_failures(h.report));
  }
  return h;
}

// ---------------- alpha map ----------------

int unreduced_input_dim(const PrincipalScenario& sc) {
  const int N = sc.msize();
  return 2 * sc.d() + 2 * N * N + sc.w();
}

LPState alpha_map(const PrincipalScenario& sc, const UnreducedPoint& p) {
  const int N = sc.msize();
  if (p.x.size() != sc.d() || p.xdot.size() != sc.d() || p.w.size() != sc.w() || p.g.rows() != N ||
      p.g.cols() != N || p.gdot.rows() != N || p.gdot.cols() != N) {
    throw DimensionMismatch("alpha_map: point does not match the scenario");
  }
  sc.group.validate_element(p.g);
  const Eigen::MatrixXd ginv = p.g.inverse();
  Eigen::VectorXd xi = sc.group.vee(ginv * p.gdot) - connection_apply(sc, p.x, p.xdot);
  LPState s;
  s.q = p.x;
  s.qdot = p.xdot;
  s.v.resize(sc.k() + sc.w());
  s.v.head(sc.k()) = xi;
  if (sc.w() > 0) s.v.tail(sc.w()) = sc.rep.action(ginv) * p.w;
  return s;
}

UnreducedPoint alpha_inverse(const PrincipalScenario& sc, const LPState& reduced, const Eigen::MatrixXd& g) {
  if (reduced.q.size() != sc.d() || reduced.qdot.size() != sc.d() || reduced.v.size() != sc.k() + sc.w()) {
    throw DimensionMismatch("alpha_inverse: reduced state does not match the scenario");
  }
  sc.group.validate_element(g);
  UnreducedPoint p;
  p.x = reduced.q;
  p.xdot = reduced.qdot;
  p.g = g;
  Eigen::VectorXd u = reduced.v.head(sc.k()) + connection_apply(sc, reduced.q, reduced.qdot);
  p.gdot = g * sc.group.hat(u);
  p.w = sc.w() > 0 ? Eigen::VectorXd(sc.rep.action(g) * reduced.v.tail(sc.w())) : Eigen::VectorXd(0);
  return p;
}

// ---------------- reduced Lagrangian ----------------

LagrangianInvariance lagrangian_invariance(const PrincipalScenario& sc, const SmoothMap& L, int n_samples,
                                           std::uint64_t seed) {
  sc.validate();
  if (L.in_dim() != unreduced_input_dim(sc) || L.out_dim() != 1) {
    throw DimensionMismatch("unreduced Lagrangian must map R^" + std::to_string(unreduced_input_dim(sc)) + " to R");
  }
  Rng rng(seed);
  LagrangianInvariance out;
  const int N = sc.msize();
  for (int s = 0; s < n_samples; ++s) {
    UnreducedPoint p;
    p.x = sc.base.sample(rng);
    p.xdot = normal_vector(sc.d(), rng);
    p.g = random_element(sc.group, rng);
    p.gdot = p.g * sc.group.hat(normal_vector(sc.k(), rng));
    p.w = normal_vector(sc.w(), rng);
    UnreducedPoint e = p;
    const Eigen::MatrixXd ginv = p.g.inverse();
    e.g = Eigen::MatrixXd::Identity(N, N);
    e.gdot = ginv * p.gdot;
    if (sc.w() > 0) e.w = sc.rep.action(ginv) * p.w;
    const double lp = eval(L, pack_unreduced(p))[0];
    const double le = eval(L, pack_unreduced(e))[0];
    const double r = std::abs(lp - le) / (1.0 + std::abs(lp));
    if (!(r <= out.max_residual)) {
      out.max_residual = r;
      out.worst = p;
    }
  }
  return out;
}

LPLagrangian reduce_lagrangian(const PrincipalScenario& sc, const SmoothMap& L, int n_samples, std::uint64_t seed,
                               double tol) {
  LagrangianInvariance inv = lagrangian_invariance(sc, L, n_samples, seed);
  if (!(inv.max_residual <= tol)) {
    throw InvarianceViolation("Lagrangian not invariant under " + sc.group.name() + ": residual " +
                              std::to_string(inv.max_residual) + " at x = " +
                              std::to_string(inv.worst.x.size() > 0 ? inv.worst.x[0] : 0.0));
  }
  const int d = sc.d();
  const int k = sc.k();
  const int w = sc.w();
  const int N = sc.msize();
  const GroupData gd(sc.group);
  const SmoothMap conn = sc.connection;
  LPLagrangian out;
  out.bundle = reduced_bundle_chart(sc);
  out.L = SmoothMap::make<3>(2 * d + k + w, 1, [L, gd, conn, d, k, w, N](const auto& z) {
    using T = scalar_of<decltype(z)>;
    Vec<T> x(z.begin(), z.begin() + d);
    Vec<T> xdot(z.begin() + d, z.begin() + 2 * d);
    Vec<T> u(z.begin() + 2 * d, z.begin() + 2 * d + k);
    Vec<T> A = conn.apply(x);
    Vec<T> ax = connection_apply(A, d, k, xdot);
    for (int g = 0; g < k; ++g) u[g] += ax[g];
    Vec<T> in;
    in.reserve(static_cast<size_t>(2 * d + 2 * N * N + w));
    in.insert(in.end(), x.begin(), x.end());
    in.insert(in.end(), xdot.begin(), xdot.end());
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) in.push_back(T(i == j ? 1.0 : 0.0));
    }
    Vec<T> m = gd.hat(u);
    in.insert(in.end(), m.begin(), m.end());
    in.insert(in.end(), z.begin() + 2 * d + k, z.end());
    return L.apply(in);
  });
  out.validate();
  return out;
}

// ---------------- exponential chart ----------------

namespace {

ChartDomain exp_chart_domain(const PrincipalScenario& sc) {
  std::vector<double> lo = sc.base.lower;
  std::vector<double> hi = sc.base.upper;
  std::vector<bool> per = sc.base.periodic;
  const double inf = std::numeric_limits<double>::infinity();
  const double bound = sc.group.injectivity_bound();
  for (int a = 0; a < sc.k(); ++a) {
    if (sc.group.periodic()) {
      lo.push_back(-bound);
      hi.push_back(bound);
      per.push_back(true);
    } else if (std::isfinite(bound)) {
      // Coordinate box inside the ball where exp stays a diffeomorphism.
      lo.push_back(-0.5 * bound);
      hi.push_back(0.5 * bound);
      per.push_back(false);
    } else {
      lo.push_back(-inf);
      hi.push_back(inf);
      per.push_back(false);
    }
  }
  return ChartDomain::box(lo, hi, per);
}

}  // namespace

LPLagrangian exp_chart_system(const PrincipalScenario& sc, const SmoothMap& L) {
  sc.validate();
  if (L.in_dim() != unreduced_input_dim(sc) || L.out_dim() != 1) {
    throw DimensionMismatch("exp_chart_system: Lagrangian input length mismatch");
  }
  const int d = sc.d();
  const int k = sc.k();
  const int w = sc.w();
  const int n = d + k;
  const GroupData gd(sc.group);
  const MatrixLieGroup group = sc.group;
  LPLagrangian out;
  out.bundle = trivial_bundle(exp_chart_domain(sc), w);
  out.bundle.name = sc.name + "/exp-chart";
  out.L = SmoothMap::make<3>(2 * n + w, 1, [L, gd, group, d, k, n](const auto& z) {
    using T = scalar_of<decltype(z)>;
    Vec<T> theta(z.begin() + d, z.begin() + n);
    Vec<T> thetadot(z.begin() + n + d, z.begin() + 2 * n);
    Vec<T> g = group.exp_t(theta);
    Vec<T> gdot = gd.matmul(g, gd.hat(gd.body_velocity(theta, thetadot)));
    Vec<T> in;
    in.insert(in.end(), z.begin(), z.begin() + d);
    in.insert(in.end(), z.begin() + n, z.begin() + n + d);
    in.insert(in.end(), g.begin(), g.end());
    in.insert(in.end(), gdot.begin(), gdot.end());
    in.insert(in.end(), z.begin() + 2 * n, z.end());
    return L.apply(in);
  });
  out.validate();
  return out;
}

GroupAction exp_chart_action(const PrincipalScenario& sc) {
  sc.validate();
  const int d = sc.d();
  const int k = sc.k();
  const int w = sc.w();
  const int n = d + k;
  const GroupData gd(sc.group);
  const MatrixLieGroup group = sc.group;
  GroupAction act;
  act.dim = k;
  act.structure = sc.group.structure();
  act.genQ = SmoothMap::make<3>(k + n, n, [gd, group, d, k, n](const auto& z) {
    using T = scalar_of<decltype(z)>;
    Vec<T> eta(z.begin(), z.begin() + k);
    Vec<T> theta(z.begin() + k + d, z.end());
    Vec<T> minus(k);
    for (int a = 0; a < k; ++a) minus[a] = -theta[a];
    Vec<T> g = group.exp_t(theta);
    Vec<T> ginv = group.exp_t(minus);
    // body = Ad_{g^{-1}} eta; solve J(theta) thetadot = body.
    Vec<T> body = gd.vee(gd.matmul(gd.matmul(ginv, gd.hat(eta)), g));
    Vec<T> J(static_cast<size_t>(k) * k, T(0.0));
    for (int j = 0; j < k; ++j) {
      Vec<T> e(k, T(0.0));
      e[j] = T(1.0);
      Vec<T> col = gd.body_velocity(theta, e);
      for (int i = 0; i < k; ++i) J[static_cast<size_t>(i) * k + j] = col[i];
    }
    Vec<T> td = solve_dense_t(J, body, k);
    Vec<T> out(n, T(0.0));
    for (int a = 0; a < k; ++a) out[d + a] = td[a];
    return out;
  });
  Vec<double> gens;
  for (int a = 0; a < k && w > 0; ++a) {
    Vec<double> f = flatten(sc.rep.generators[a]);
    gens.insert(gens.end(), f.begin(), f.end());
  }
  act.genV = SmoothMap::make<3>(k + n + w, w, [gens, k, n, w](const auto& z) {
    using T = scalar_of<decltype(z)>;
    Vec<T> out(w, T(0.0));
    for (int a = 0; a < k; ++a) {
      for (int p = 0; p < w; ++p) {
        for (int r = 0; r < w; ++r) {
          const double gg = gens[(static_cast<size_t>(a) * w + p) * w + r];
          if (gg != 0.0) out[p] += gg * (z[a] * z[k + n + r]);
        }
      }
    }
    return out;
  });
  return act;
}

UnreducedPoint chart_to_point(const PrincipalScenario& sc, const LPState& cs) {
  const int d = sc.d();
  const int k = sc.k();
  if (cs.q.size() != d + k || cs.qdot.size() != d + k || cs.v.size() != sc.w()) {
    throw DimensionMismatch("chart_to_point: state does not match the exponential chart");
  }
  const GroupData gd(sc.group);
  const int N = sc.msize();
  Vec<double> theta = to_vec(cs.q.tail(k));
  Vec<double> thetadot = to_vec(cs.qdot.tail(k));
  UnreducedPoint p;
  p.x = cs.q.head(d);
  p.xdot = cs.qdot.head(d);
  Vec<double> g = sc.group.exp_t(theta);
  p.g = unflatten(g, N);
  p.gdot = unflatten(gd.matmul(g, gd.hat(gd.body_velocity(theta, thetadot))), N);
  p.w = cs.v;
  return p;
}

LPState point_to_chart(const PrincipalScenario& sc, const UnreducedPoint& p) {
  const int d = sc.d();
  const int k = sc.k();
  const GroupData gd(sc.group);
  Eigen::VectorXd theta = sc.group.log(p.g);
  Vec<double> th = to_vec(theta);
  Eigen::MatrixXd J(k, k);
  for (int j = 0; j < k; ++j) {
    Vec<double> e(k, 0.0);
    e[j] = 1.0;
    J.col(j) = to_eigen(gd.body_velocity(th, e));
  }
  Eigen::VectorXd body = sc.group.vee(p.g.inverse() * p.gdot);
  LPState s;
  s.q.resize(d + k);
  s.qdot.resize(d + k);
  s.q << p.x, theta;
  s.qdot << p.xdot, J.fullPivLu().solve(body);
  s.v = p.w;
  return s;
}

GroupTrajectory chart_to_group(const PrincipalScenario& sc, const Trajectory& chart_traj) {
  GroupTrajectory out;
  out.times = chart_traj.times;
  out.points.reserve(chart_traj.states.size());
  for (const auto& s : chart_traj.states) out.points.push_back(chart_to_point(sc, s));
  return out;
}

Trajectory project_trajectory(const PrincipalScenario& sc, const GroupTrajectory& traj) {
  if (traj.times.size() != traj.points.size()) throw DimensionMismatch("project_trajectory: grid/length mismatch");
  Trajectory out;
  out.times = traj.times;
  out.method = "projected";
  if (traj.times.size() > 1) out.step = traj.times[1] - traj.times[0];
  out.states.reserve(traj.points.size());
  for (const auto& p : traj.points) out.states.push_back(alpha_map(sc, p));
  return out;
}

Reconstruction integrate_reconstructed(const PrincipalScenario& sc, const LPLagrangian& reduced, const LPState& s0,
                                       const Eigen::MatrixXd& g0, double t0, double t1, double h, Method method) {
  reduced.validate();
  sc.group.validate_element(g0);
  if (!(h > 0.0)) throw InvalidArgument("integrate_reconstructed: step must be positive");
  if (!(t1 > t0)) throw InvalidArgument("integrate_reconstructed: need t1 > t0");
  const int d = sc.d();
  const int k = sc.k();
  const int m = reduced.bundle.m;
  const int N = sc.msize();
  if (reduced.bundle.n() != d || m != k + sc.w()) {
    throw DimensionMismatch("integrate_reconstructed: reduced system does not match the scenario");
  }
  const long steps = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / h - 1e-9)));
  const double dt = (t1 - t0) / static_cast<double>(steps);
  const int len = 2 * d + m + N * N;
  auto unpack = [d, m](const Eigen::VectorXd& y) { return LPState{y.head(d), y.segment(d, d), y.segment(2 * d, m)}; };
  auto rhs = [&](const Eigen::VectorXd& y) {
    LPState s = unpack(y);
    auto [qdd, vd] = accelerations(reduced, s);
    Eigen::MatrixXd g = unflatten(to_vec(y.tail(N * N)), N);
    Eigen::VectorXd u = s.v.head(k) + connection_apply(sc, s.q, s.qdot);
    Eigen::MatrixXd gdot = g * sc.group.hat(u);
    Eigen::VectorXd f(len);
    f.head(2 * d + m) << s.qdot, qdd, vd;
    f.tail(N * N) = to_eigen(flatten(gdot));
    return f;
  };
  Reconstruction out;
  out.reduced.method = method_name(method);
  out.reduced.step = dt;
  Eigen::VectorXd y(len);
  LPState start = s0;
  start.q = reduced.bundle.base.wrap(s0.q);
  reduced.bundle.base.check(start.q);
  y << pack(start), to_eigen(flatten(g0));
  out.reduced.times.push_back(t0);
  out.reduced.states.push_back(start);
  out.g.push_back(g0);
  for (long s = 0; s < steps; ++s) {
    if (method == Method::RK4) {
      Eigen::VectorXd k1 = rhs(y);
      Eigen::VectorXd k2 = rhs(y + 0.5 * dt * k1);
      Eigen::VectorXd k3 = rhs(y + 0.5 * dt * k2);
      Eigen::VectorXd k4 = rhs(y + dt * k3);
      y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      y += dt * rhs(y);
    }
    LPState st = unpack(y);
    st.q = reduced.bundle.base.wrap(st.q);
    reduced.bundle.base.check(st.q);
    y.head(d) = st.q;
    out.reduced.times.push_back(s + 1 == steps ? t1 : t0 + static_cast<double>(s + 1) * dt);
    out.reduced.states.push_back(st);
    out.g.push_back(unflatten(to_vec(y.tail(N * N)), N));
  }
  return out;
}

// ---------------- diamond and Noether split ----------------

Eigen::VectorXd diamond(const Representation& rep, const Eigen::VectorXd& b, const Eigen::VectorXd& a) {
  if (b.size() != rep.dim || a.size() != rep.dim) throw DimensionMismatch("diamond: vector length mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(rep.generators.size()));
  for (size_t al = 0; al < rep.generators.size(); ++al) {
    out[static_cast<Eigen::Index>(al)] = a.dot(rep.generators[al] * b);
  }
  return out;
}

namespace {

void check_reduced(const PrincipalScenario& sc, const LPLagrangian& reduced) {
  if (reduced.bundle.n() != sc.d() || reduced.bundle.m != sc.k() + sc.w()) {
    throw InvalidArgument("reduced system does not have the algebra (+) W block structure of scenario '" + sc.name +
                          "'");
  }
}

}  // namespace

VerticalSplit reduced_vertical_split(const PrincipalScenario& sc, const LPLagrangian& reduced, const LPState2& s2) {
  check_reduced(sc, reduced);
  const int d = sc.d();
  const int k = sc.k();
  const int w = sc.w();
  const int m = k + w;
  LPState s{s2.q, s2.qdot, s2.v};
  LagrangianJet jet = lagrangian_jet(reduced, s);
  // d/dt mu from the Hessian rows of the fiber block.
  Eigen::VectorXd rate(2 * d + m);
  rate << s2.qdot, s2.qddot, s2.vdot;
  Eigen::VectorXd mudot = jet.hess.bottomRows(m) * rate;
  const Eigen::VectorXd xi = s2.v.head(k);
  const Eigen::VectorXd a = s2.v.tail(w);
  const Eigen::VectorXd mu_g = jet.mu.head(k);
  const Eigen::VectorXd mu_w = jet.mu.tail(w);
  const Eigen::VectorXd Ax = connection_apply(sc, s2.q, s2.qdot);

  VerticalSplit out;
  out.new_vertical = coad(sc.group, xi, mu_g) - (mudot.head(k) - coad(sc.group, Ax, mu_g));
  for (int al = 0; al < k && w > 0; ++al) out.new_vertical[al] -= mu_w.dot(sc.rep.generators[al] * a);
  if (w > 0) {
    const Eigen::MatrixXd rx = sc.rep.derivative(xi);
    const Eigen::MatrixXd ra = sc.rep.derivative(Ax);
    out.inherited = rx.transpose() * mu_w - (mudot.tail(w) - ra.transpose() * mu_w);
  } else {
    out.inherited = Eigen::VectorXd(0);
  }
  return out;
}

double reduced_noether(const PrincipalScenario& sc, const LPLagrangian& reduced, const LPState& s,
                       const Eigen::VectorXd& eta_bar) {
  check_reduced(sc, reduced);
  if (eta_bar.size() != sc.k()) throw DimensionMismatch("reduced_noether: eta_bar length mismatch");
  return lagrangian_jet(reduced, s).mu.head(sc.k()).dot(eta_bar);
}

double reduced_noether_drift_rhs(const PrincipalScenario& sc, const LPLagrangian& reduced, const LPState& s,
                                 const Eigen::VectorXd& eta_bar) {
  check_reduced(sc, reduced);
  if (eta_bar.size() != sc.k()) throw DimensionMismatch("reduced_noether_drift_rhs: eta_bar length mismatch");
  if (sc.w() == 0) return 0.0;
  const Eigen::VectorXd mu_w = lagrangian_jet(reduced, s).mu.tail(sc.w());
  return -mu_w.dot(sc.rep.derivative(eta_bar) * s.v.tail(sc.w()));
}

Eigen::VectorXd body_of_spatial(const MatrixLieGroup& group, const Eigen::MatrixXd& g, const Eigen::VectorXd& eta) {
  group.validate_element(g);
  return group.vee(g.inverse() * group.hat(eta) * g);
}

// ---------------- stages ----------------

StagesResult stages_reduce(const PrincipalScenario& sc, const std::vector<int>& normal, const SmoothMap& L,
                           const StagesOptions& opt) {
  sc.validate();
  if (sc.d() != 0 || sc.w() != 0) {
    throw InvalidArgument("stages_reduce: supported for a point base without W");
  }
  const int k = sc.k();
  const Vec<double>& c = sc.group.structure();
  std::set<int> nset(normal.begin(), normal.end());
  if (nset.empty() || nset.size() != normal.size() || *nset.begin() < 0 || *nset.rbegin() >= k) {
    throw InvalidArgument("stages_reduce: normal subalgebra indices must be distinct and within the algebra");
  }
  std::vector<int> comp;
  for (int a = 0; a < k; ++a) {
    if (!nset.count(a)) comp.push_back(a);
  }
  auto cc = [&](int g, int a, int b) { return c[(static_cast<size_t>(g) * k + a) * k + b]; };
  for (int a = 0; a < k; ++a) {
    for (int b : normal) {
      for (int g : comp) {
        if (std::abs(cc(g, a, b)) > 1e-12) throw NotNormal("stages_reduce: ad(g) n leaves n");
      }
    }
  }
  for (int a = 0; a < k; ++a) {
    for (int b : normal) {
      for (int g : normal) {
        if (std::abs(cc(g, a, b)) > 1e-12) throw InvalidArgument("stages_reduce: the normal subgroup must be central");
      }
    }
  }
  for (int a : comp) {
    for (int b : comp) {
      for (int g : comp) {
        if (std::abs(cc(g, a, b)) > 1e-12) throw InvalidArgument("stages_reduce: the quotient must be abelian");
      }
    }
  }
  const int rs = static_cast<int>(comp.size());
  const int rn = static_cast<int>(normal.size());
  const std::vector<int> normal_v(normal);

  StagesResult res;
  res.normal = normal_v;
  res.complement = comp;
  res.direct = build_reduced_bundle(sc, opt.n_samples, opt.seed, opt.tol);
  res.direct_lagrangian = reduce_lagrangian(sc, L);

  // Section sigma(y) = exp(y in s); A_N(y) ydot = -n-part of sigma^{-1} sigma-dot.
  SmoothMap A_N;
  if (opt.compatible) {
    A_N = SmoothMap::make<3>(rs, rs * rn, [c, k, comp, normal_v, rs, rn](const auto& y) {
      using T = scalar_of<decltype(y)>;
      Vec<T> yemb(k, T(0.0));
      for (int i = 0; i < rs; ++i) yemb[comp[i]] = y[i];
      Vec<T> out(static_cast<size_t>(rs) * rn, T(0.0));
      for (int i = 0; i < rs; ++i) {
        Vec<T> e(k, T(0.0));
        e[comp[i]] = T(1.0);
        Vec<T> body = dexp_series_t(c, k, yemb, e, -1.0, k + 2);
        for (int g = 0; g < rn; ++g) out[static_cast<size_t>(i) * rn + g] = -body[normal_v[g]];
      }
      return out;
    });
  } else {
    A_N = zero_connection(rs, rn);
  }
  res.stage1_scenario =
      make_scenario(sc.name + "/N", ChartDomain::euclidean(rs), MatrixLieGroup::abelian(rn), A_N, "none");
  res.stage1 = build_reduced_bundle(res.stage1_scenario, opt.n_samples, opt.seed, opt.tol);

  // Stage-one unreduced Lagrangian on K x N: g = n sigma(y), g^{-1} gdot = n^{-1} ndot + sigma^{-1} sigma-dot.
  const GroupData gd(sc.group);
  const MatrixLieGroup group = sc.group;
  const int nn = rn + 1;
  SmoothMap L1 = SmoothMap::make<3>(2 * rs + 2 * nn * nn, 1, [L, gd, group, c, k, comp, normal_v, rs, rn, nn](const auto& z) {
    using T = scalar_of<decltype(z)>;
    Vec<T> yemb(k, T(0.0));
    Vec<T> ydemb(k, T(0.0));
    for (int i = 0; i < rs; ++i) {
      yemb[comp[i]] = z[i];
      ydemb[comp[i]] = z[rs + i];
    }
    const size_t noff = 2 * static_cast<size_t>(rs);
    const size_t ndoff = noff + static_cast<size_t>(nn) * nn;
    Vec<T> temb(k, T(0.0));
    Vec<T> body = dexp_series_t(c, k, yemb, ydemb, -1.0, k + 2);
    for (int g = 0; g < rn; ++g) {
      temb[normal_v[g]] = z[noff + static_cast<size_t>(g) * nn + rn];
      body[normal_v[g]] += z[ndoff + static_cast<size_t>(g) * nn + rn];
    }
    Vec<T> g = gd.matmul(group.exp_t(temb), group.exp_t(yemb));
    Vec<T> gdot = gd.matmul(g, gd.hat(body));
    Vec<T> in = g;
    in.insert(in.end(), gdot.begin(), gdot.end());
    return L.apply(in);
  });
  res.stage1_lagrangian = reduce_lagrangian(res.stage1_scenario, L1);

  // K-translation invariance of the stage-one Lagrangian.
  {
    Rng rng(opt.seed + 1);
    double worst = 0.0;
    for (int s = 0; s < opt.n_samples; ++s) {
      Eigen::VectorXd z(2 * rs + rn);
      for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
      Eigen::VectorXd zs = z;
      for (int i = 0; i < rs; ++i) zs[i] += rng.normal();
      const double l0 = eval(res.stage1_lagrangian.L, z)[0];
      const double l1 = eval(res.stage1_lagrangian.L, zs)[0];
      worst = std::max(worst, std::abs(l1 - l0) / (1.0 + std::abs(l0)));
    }
    res.compatibility_residual = worst;
    res.compatible = worst <= 1e-10;
  }

  // Stage two over a point: fiber k (+) n with bracket [k1, k2]_n = -omega_1(k1, k2) at y = 0.
  const int m2 = rs + rn;
  Vec<double> om = res.stage1.bundle.omega.apply(Vec<double>(rs, 0.0));
  Eigen::VectorXd br = Eigen::VectorXd::Zero(m2 * m2 * m2);
  for (int i = 0; i < rs; ++i) {
    for (int j = 0; j < rs; ++j) {
      for (int g = 0; g < rn; ++g) br[((rs + g) * m2 + i) * m2 + j] = -om[(static_cast<size_t>(g) * rs + i) * rs + j];
    }
  }
  res.stage2 = trivial_bundle(ChartDomain::euclidean(0), m2);
  res.stage2.bracket = constant_map(0, br);
  res.stage2.name = sc.name + "/N/K";
  res.stage2_report = check_axioms(res.stage2, opt.n_samples, opt.seed, opt.tol);
  if (!res.stage2_report.all_passed()) {
    throw AxiomViolation("stage-two bundle fails:" + axiom_failures(res.stage2_report));
  }
  const SmoothMap L1red = res.stage1_lagrangian.L;
  res.staged_lagrangian.bundle = res.stage2;
  res.staged_lagrangian.L = SmoothMap::make<3>(m2, 1, [L1red, rs, m2](const auto& z) {
    using T = scalar_of<decltype(z)>;
    Vec<T> in(static_cast<size_t>(rs) + m2, T(0.0));
    for (int i = 0; i < m2; ++i) in[rs + i] = z[i];
    return L1red.apply(in);
  });

  // beta = alpha_K o alpha_N o alpha_G^{-1} at the identity: k = xi_s, zeta = xi_n - A_N(0) xi_s.
  Vec<double> A0 = A_N.apply(Vec<double>(rs, 0.0));
  res.beta = Eigen::MatrixXd::Zero(m2, k);
  for (int i = 0; i < rs; ++i) res.beta(i, comp[i]) = 1.0;
  for (int g = 0; g < rn; ++g) {
    res.beta(rs + g, normal_v[g]) = 1.0;
    for (int i = 0; i < rs; ++i) res.beta(rs + g, comp[i]) -= A0[static_cast<size_t>(i) * rn + g];
  }

  Vec<double> c2 = to_vec(br);
  double smis = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      Vec<double> x = to_vec(res.beta.col(a));
      Vec<double> y = to_vec(res.beta.col(b));
      Eigen::VectorXd lhs = to_eigen(fiber_bracket_t(c2, m2, x, y));
      Eigen::VectorXd cab(k);
      for (int g = 0; g < k; ++g) cab[g] = cc(g, a, b);
      smis = std::max(smis, (lhs - res.beta * cab).cwiseAbs().maxCoeff());
    }
  }
  res.structure_mismatch = smis;

  Rng rng(opt.seed + 2);
  double lmis = 0.0;
  for (int s = 0; s < opt.n_samples; ++s) {
    Eigen::VectorXd xi = normal_vector(k, rng);
    const double ld = eval(res.direct_lagrangian.L, xi)[0];
    const double ls = eval(res.staged_lagrangian.L, res.beta * xi)[0];
    lmis = std::max(lmis, std::abs(ld - ls));
  }
  res.lagrangian_mismatch = lmis;
  return res;
}

}  // namespace lpmech
