#include "lpmech/lpbundle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "lpmech/polynomial.hpp"

namespace lpmech {

// ---------------- ChartDomain ----------------

ChartDomain ChartDomain::euclidean(int n) {
  const double inf = std::numeric_limits<double>::infinity();
  ChartDomain d;
  d.n = n;
  d.lower.assign(n, -inf);
  d.upper.assign(n, inf);
  d.periodic.assign(n, false);
  return d;
}

ChartDomain ChartDomain::box(std::vector<double> lower, std::vector<double> upper, std::vector<bool> periodic) {
  ChartDomain d;
  d.n = static_cast<int>(lower.size());
  d.lower = std::move(lower);
  d.upper = std::move(upper);
  d.periodic = std::move(periodic);
  d.validate();
  return d;
}

void ChartDomain::validate() const {
  if (n < 0) throw InvalidArgument("chart: negative dimension");
  if (static_cast<int>(lower.size()) != n || static_cast<int>(upper.size()) != n ||
      static_cast<int>(periodic.size()) != n) {
    throw InvalidArgument("chart: bounds and periodic flags must have length n");
  }
  for (int i = 0; i < n; ++i) {
    if (!(lower[i] < upper[i])) throw InvalidArgument("chart: empty interval for coordinate " + std::to_string(i));
    if (periodic[i] && !(std::isfinite(lower[i]) && std::isfinite(upper[i]))) {
      throw InvalidArgument("chart: periodic coordinate " + std::to_string(i) + " needs finite bounds");
    }
  }
}

void ChartDomain::check(const Eigen::VectorXd& q) const {
  if (q.size() != n) throw DimensionMismatch("chart: point has wrong dimension");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(q[i])) throw ChartViolation("chart: non-finite coordinate " + std::to_string(i));
    if (!periodic[i] && (q[i] < lower[i] || q[i] > upper[i])) {
      throw ChartViolation("chart: coordinate " + std::to_string(i) + " = " + std::to_string(q[i]) +
                           " outside [" + std::to_string(lower[i]) + ", " + std::to_string(upper[i]) + "]");
    }
  }
}

Eigen::VectorXd ChartDomain::wrap(const Eigen::VectorXd& q) const {
  Eigen::VectorXd out = q;
  for (int i = 0; i < n; ++i) {
    // In-range values are returned bit-identical.
    if (!periodic[i] || (q[i] >= lower[i] && q[i] < upper[i])) continue;
    const double period = upper[i] - lower[i];
    double t = std::fmod(q[i] - lower[i], period);
    if (t < 0.0) t += period;
    out[i] = lower[i] + t;
    if (out[i] >= upper[i]) out[i] = lower[i];
  }
  return out;
}

Eigen::VectorXd ChartDomain::sample(Rng& rng) const {
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) {
    double lo = std::isfinite(lower[i]) ? lower[i] : std::min(-1.0, upper[i] - 2.0);
    double hi = std::isfinite(upper[i]) ? upper[i] : std::max(1.0, lower[i] + 2.0);
    if (!periodic[i]) {
      const double margin = 0.05 * (hi - lo);
      lo += margin;
      hi -= margin;
    }
    q[i] = rng.uniform(lo, hi);
  }
  return q;
}

// ---------------- LPBundleChart ----------------

void LPBundleChart::validate() const {
  base.validate();
  const int nn = base.n;
  if (m < 0) throw DimensionMismatch("bundle: negative fiber dimension");
  auto expect = [nn](const SmoothMap& f, int out, const char* what) {
    if (!f.valid()) throw DimensionMismatch(std::string("bundle: missing ") + what);
    if (f.in_dim() != nn || f.out_dim() != out) {
      throw DimensionMismatch(std::string("bundle: ") + what + " has shape " + std::to_string(f.in_dim()) + " -> " +
                              std::to_string(f.out_dim()) + ", expected " + std::to_string(nn) + " -> " +
                              std::to_string(out));
    }
  };
  expect(gamma, nn * m * m, "connection coefficients");
  expect(bracket, m * m * m, "bracket structure functions");
  expect(omega, m * nn * nn, "two-form components");
}

LPBundleChart trivial_bundle(const ChartDomain& base, int m) {
  LPBundleChart b;
  b.base = base;
  b.m = m;
  const int n = base.n;
  b.gamma = constant_map(n, Eigen::VectorXd::Zero(n * m * m));
  b.bracket = constant_map(n, Eigen::VectorXd::Zero(m * m * m));
  b.omega = constant_map(n, Eigen::VectorXd::Zero(m * n * n));
  b.name = "trivial";
  return b;
}

// ---------------- sections ----------------

Section constant_section(const Eigen::VectorXd& X, const Eigen::VectorXd& w) {
  const int n = static_cast<int>(X.size());
  return {constant_map(n, X), constant_map(n, w)};
}

Section coordinate_field(int n, int m, int i) {
  return constant_section(Eigen::VectorXd::Unit(n, i), Eigen::VectorXd::Zero(m));
}

Section fiber_basis_section(int n, int m, int alpha) {
  return constant_section(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Unit(m, alpha));
}

Section random_section(int n, int m, int degree, double scale, Rng& rng) {
  PolynomialTable tx = random_polynomial_table(n, n, degree, scale, rng);
  PolynomialTable tw = random_polynomial_table(n, m, degree, scale, rng);
  return {polynomial_map(tx), polynomial_map(tw)};
}

// ---------------- operators ----------------

Eigen::VectorXd covariant_derivative(const LPBundleChart& b, const Eigen::VectorXd& X, const SmoothMap& w,
                                     const Eigen::VectorXd& q) {
  b.base.check(q);
  if (X.size() != b.n()) throw DimensionMismatch("covariant_derivative: tangent vector length mismatch");
  return to_eigen(covariant_derivative_t(b, to_vec(X), w, to_vec(q)));
}

namespace {

/// Structure values and first derivatives at a real point; d*[idx * n + j] = d_j of entry idx.
struct StructureJet {
  Vec<double> gamma, bracket, omega;
  Vec<double> dgamma, dbracket, domega;
};

StructureJet jet_at(const LPBundleChart& b, const Eigen::VectorXd& q) {
  const Vec<double> qv = to_vec(q);
  StructureJet s;
  s.gamma = b.gamma.apply(qv);
  s.bracket = b.bracket.apply(qv);
  s.omega = b.omega.apply(qv);
  s.dgamma = jacobian_t(b.gamma, qv);
  s.dbracket = jacobian_t(b.bracket, qv);
  s.domega = jacobian_t(b.omega, qv);
  return s;
}

/// Running sum that remembers the largest term magnitude.
struct Acc {
  double sum = 0.0;
  double scale = 0.0;
  void add(double t) {
    sum += t;
    scale = std::max(scale, std::abs(t));
  }
};

inline size_t gi(int n, int m, int i, int a, int b) {
  (void)n;
  return (static_cast<size_t>(i) * m + a) * m + b;
}
inline size_t ci(int m, int g, int a, int b) { return (static_cast<size_t>(g) * m + a) * m + b; }
inline size_t oi(int n, int a, int i, int j) { return (static_cast<size_t>(a) * n + i) * n + j; }

Acc curvature_entry(const StructureJet& s, int n, int m, int a, int i, int j, int bb) {
  Acc acc;
  acc.add(s.dgamma[gi(n, m, j, a, bb) * n + i]);
  acc.add(-s.dgamma[gi(n, m, i, a, bb) * n + j]);
  for (int g = 0; g < m; ++g) {
    acc.add(s.gamma[gi(n, m, i, a, g)] * s.gamma[gi(n, m, j, g, bb)]);
    acc.add(-s.gamma[gi(n, m, j, a, g)] * s.gamma[gi(n, m, i, g, bb)]);
  }
  return acc;
}

Acc domega_entry(const StructureJet& s, int n, int m, int a, int i, int j, int k) {
  Acc acc;
  const int idx[3][3] = {{i, j, k}, {j, k, i}, {k, i, j}};
  for (const auto& t : idx) {
    acc.add(s.domega[oi(n, a, t[1], t[2]) * n + t[0]]);
    for (int bb = 0; bb < m; ++bb) acc.add(s.gamma[gi(n, m, t[0], a, bb)] * s.omega[oi(n, bb, t[1], t[2])]);
  }
  return acc;
}

}  // namespace

Vec<double> curvature(const LPBundleChart& b, const Eigen::VectorXd& q) {
  b.base.check(q);
  const int n = b.n();
  const int m = b.m;
  StructureJet s = jet_at(b, q);
  Vec<double> k(static_cast<size_t>(m) * n * n * m, 0.0);
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        // Computed once per unordered pair so antisymmetry holds bit-exactly.
        for (int bb = 0; bb < m; ++bb) {
          const double v = curvature_entry(s, n, m, a, i, j, bb).sum;
          k[((static_cast<size_t>(a) * n + i) * n + j) * m + bb] = v;
          k[((static_cast<size_t>(a) * n + j) * n + i) * m + bb] = -v;
        }
      }
    }
  }
  return k;
}

Vec<double> ext_cov_derivative_omega(const LPBundleChart& b, const Eigen::VectorXd& q) {
  b.base.check(q);
  const int n = b.n();
  const int m = b.m;
  StructureJet s = jet_at(b, q);
  Vec<double> d(static_cast<size_t>(m) * n * n * n, 0.0);
  for (int a = 0; a < m; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
          // The cyclic sum is alternating for skew omega; store all six orderings.
          const double v = domega_entry(s, n, m, a, i, j, k).sum;
          auto at = [&](int x, int y, int z) -> double& { return d[((static_cast<size_t>(a) * n + x) * n + y) * n + z]; };
          at(i, j, k) = v;
          at(j, k, i) = v;
          at(k, i, j) = v;
          at(j, i, k) = -v;
          at(i, k, j) = -v;
          at(k, j, i) = -v;
        }
      }
    }
  }
  return d;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> section_bracket(const LPBundleChart& b, const Section& z1,
                                                            const Section& z2, const Eigen::VectorXd& q) {
  b.base.check(q);
  Vec<double> r = section_bracket_t(b, z1, z2, to_vec(q));
  const int n = b.n();
  Eigen::VectorXd x(n), w(b.m);
  for (int i = 0; i < n; ++i) x[i] = r[i];
  for (int a = 0; a < b.m; ++a) w[a] = r[n + a];
  return {x, w};
}

Section bracket_section(const LPBundleChart& b, const Section& z1, const Section& z2) {
  const int n = b.n();
  const int m = b.m;
  auto full = [b, z1, z2](const auto& q) { return section_bracket_t(b, z1, z2, q); };
  SmoothMap X = SmoothMap::make<2>(n, n, [full, n](const auto& q) {
    auto r = full(q);
    r.resize(n);
    return r;
  });
  SmoothMap w = SmoothMap::make<2>(n, m, [full, n](const auto& q) {
    auto r = full(q);
    return decltype(r)(r.begin() + n, r.end());
  });
  return {X, w};
}

double jacobi_residual(const LPBundleChart& b, const Section& z1, const Section& z2, const Section& z3,
                       const Eigen::VectorXd& q) {
  b.base.check(q);
  const Vec<double> qv = to_vec(q);
  Vec<double> sum(static_cast<size_t>(b.n() + b.m), 0.0);
  const Section* zs[3] = {&z1, &z2, &z3};
  for (int r = 0; r < 3; ++r) {
    const Section& a = *zs[r];
    Section inner = bracket_section(b, *zs[(r + 1) % 3], *zs[(r + 2) % 3]);
    Vec<double> t = section_bracket_t(b, a, inner, qv);
    for (size_t k = 0; k < sum.size(); ++k) sum[k] += t[k];
  }
  double s2 = 0.0;
  for (double v : sum) s2 += v * v;
  return std::sqrt(s2);
}

// ---------------- axiom checker ----------------

bool AxiomReport::all_passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const AxiomCondition& c) { return c.passed; });
}

const AxiomCondition* AxiomReport::find(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string AxiomReport::to_text() const {
  std::ostringstream os;
  os << "condition          max_residual            scale                   status  worst_point\n";
  os << std::setprecision(6) << std::scientific;
  for (const auto& c : conditions) {
    os << std::left << std::setw(19) << c.name << std::setw(24) << c.max_residual << std::setw(24) << c.scale
       << std::setw(8) << (c.passed ? "pass" : "FAIL") << "(";
    for (Eigen::Index i = 0; i < c.worst_point.size(); ++i) {
      if (i) os << ", ";
      os << c.worst_point[i];
    }
    os << ")\n";
  }
  os << "samples " << n_samples << ", seed " << seed << ", tol " << tol << ": "
     << (all_passed() ? "all conditions pass" : "violations found") << "\n";
  return os.str();
}

std::string AxiomReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_samples"] = n_samples;
  j["seed"] = seed;
  j["tol"] = tol;
  j["all_passed"] = all_passed();
  j["conditions"] = nlohmann::ordered_json::array();
  for (const auto& c : conditions) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["description"] = c.description;
    e["max_residual"] = c.max_residual;
    e["scale"] = c.scale;
    e["worst_point"] = to_vec(c.worst_point);
    e["passed"] = c.passed;
    j["conditions"].push_back(e);
  }
  return j.dump(2);
}

AxiomReport check_axioms(const LPBundleChart& b, int n_samples, std::uint64_t seed, double tol) {
  if (n_samples < 1) throw InvalidArgument("check_axioms: n_samples must be >= 1");
  b.validate();
  const int n = b.n();
  const int m = b.m;
  AxiomReport rep;
  rep.n_samples = n_samples;
  rep.seed = seed;
  rep.tol = tol;
  rep.conditions = {
      {"fiber_skew", "bracket structure functions are skew", 0.0, 0.0, {}, true},
      {"fiber_jacobi", "fiberwise Jacobi identity of the bracket", 0.0, 0.0, {}, true},
      {"omega_skew", "two-form components are skew", 0.0, 0.0, {}, true},
      {"omega_closed", "exterior covariant derivative of the two-form vanishes", 0.0, 0.0, {}, true},
      {"bracket_parallel", "connection is a derivation of the fiber bracket", 0.0, 0.0, {}, true},
      {"curvature_omega", "curvature equals minus the bracket with the two-form", 0.0, 0.0, {}, true},
  };
  Rng rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd q = b.base.sample(rng);
    StructureJet jet = jet_at(b, q);
    auto record = [&](int cond, const Acc& acc) {
      AxiomCondition& c = rep.conditions[cond];
      const double r = std::abs(acc.sum);
      if (!(r <= tol * (1.0 + acc.scale))) c.passed = false;
      if (std::isnan(r) || r > c.max_residual || c.worst_point.size() == 0) {
        c.max_residual = r;
        c.scale = acc.scale;
        c.worst_point = q;
      }
    };
    const auto& cc = jet.bracket;
    for (int g = 0; g < m; ++g) {
      for (int a = 0; a < m; ++a) {
        for (int d = a; d < m; ++d) {
          Acc acc;
          acc.add(cc[ci(m, g, a, d)]);
          acc.add(cc[ci(m, g, d, a)]);
          record(0, acc);
        }
      }
    }
    for (int d = 0; d < m; ++d) {
      for (int a = 0; a < m; ++a) {
        for (int bb = 0; bb < m; ++bb) {
          for (int c = 0; c < m; ++c) {
            Acc acc;
            for (int e = 0; e < m; ++e) {
              acc.add(cc[ci(m, e, a, bb)] * cc[ci(m, d, e, c)]);
              acc.add(cc[ci(m, e, bb, c)] * cc[ci(m, d, e, a)]);
              acc.add(cc[ci(m, e, c, a)] * cc[ci(m, d, e, bb)]);
            }
            record(1, acc);
          }
        }
      }
    }
    for (int a = 0; a < m; ++a) {
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          Acc acc;
          acc.add(jet.omega[oi(n, a, i, j)]);
          acc.add(jet.omega[oi(n, a, j, i)]);
          record(2, acc);
        }
      }
    }
    for (int a = 0; a < m; ++a) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          for (int k = j + 1; k < n; ++k) record(3, domega_entry(jet, n, m, a, i, j, k));
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int g = 0; g < m; ++g) {
        for (int a = 0; a < m; ++a) {
          for (int bb = 0; bb < m; ++bb) {
            Acc acc;
            acc.add(jet.dbracket[ci(m, g, a, bb) * n + i]);
            for (int d = 0; d < m; ++d) {
              acc.add(jet.gamma[gi(n, m, i, g, d)] * cc[ci(m, d, a, bb)]);
              acc.add(-cc[ci(m, g, d, bb)] * jet.gamma[gi(n, m, i, d, a)]);
              acc.add(-cc[ci(m, g, a, d)] * jet.gamma[gi(n, m, i, d, bb)]);
            }
            record(4, acc);
          }
        }
      }
    }
    for (int a = 0; a < m; ++a) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          for (int bb = 0; bb < m; ++bb) {
            Acc acc = curvature_entry(jet, n, m, a, i, j, bb);
            for (int g = 0; g < m; ++g) acc.add(cc[ci(m, a, g, bb)] * jet.omega[oi(n, g, i, j)]);
            record(5, acc);
          }
        }
      }
    }
  }
  for (auto& c : rep.conditions) {
    if (c.worst_point.size() == 0) c.worst_point = Eigen::VectorXd::Zero(n);
  }
  return rep;
}

}  // namespace lpmech
