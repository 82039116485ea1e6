#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "lpmech/smoothmap.hpp"

namespace lpmech {

enum class GroupKind { SO3, Heisenberg, Abelian };

/// Linear representation of a group on an auxiliary space W.
struct Representation {
  std::string name;
  int dim = 0;
  /// Infinitesimal generators rho'(e_alpha), dim x dim each.
  std::vector<Eigen::MatrixXd> generators;
  /// Block layout of rho(g) in terms of the defining matrix g: each block is
  /// either g itself or g^{-T}, placed along the diagonal.
  std::vector<bool> block_is_dual;
  int block_size = 0;

  Eigen::MatrixXd action(const Eigen::MatrixXd& g) const;
  /// rho'(xi) = sum_alpha xi^alpha rho'(e_alpha).
  Eigen::MatrixXd derivative(const Eigen::VectorXd& xi) const;
};

/// Matrix Lie group with closed-form exp and log. Algebra coordinates are
/// taken against a fixed basis of matrices.
class MatrixLieGroup {
 public:
  static MatrixLieGroup so3();
  static MatrixLieGroup heisenberg();
  /// R^k realized as (k+1)x(k+1) translation matrices; `periodic` marks a torus chart.
  static MatrixLieGroup abelian(int k, bool periodic = false);
  static MatrixLieGroup by_name(const std::string& name, int k = 0);

  const std::string& name() const { return name_; }
  GroupKind kind() const { return kind_; }
  int matrix_size() const { return msize_; }
  int dim() const { return dim_; }
  bool periodic() const { return periodic_; }
  const std::vector<Eigen::MatrixXd>& basis() const { return basis_; }
  /// c^gamma_{alpha beta} at index (gamma*k + alpha)*k + beta.
  const Vec<double>& structure() const { return structure_; }
  /// Radius in algebra coordinates inside which log(exp(xi)) = xi.
  double injectivity_bound() const;

  Eigen::MatrixXd hat(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd vee(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd exp(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd log(const Eigen::MatrixXd& g) const;
  Eigen::MatrixXd identity() const { return Eigen::MatrixXd::Identity(msize_, msize_); }

  /// Throws InvalidArgument when g is not a group element within 1e-8.
  void validate_element(const Eigen::MatrixXd& g) const;

  std::vector<std::string> representation_names() const;
  Representation representation(const std::string& rep_name) const;

  /// exp in algebra coordinates for any scalar level, row-major N x N.
  template <class T>
  Vec<T> exp_t(const Vec<T>& xi) const;

 private:
  std::string name_;
  GroupKind kind_ = GroupKind::Abelian;
  int msize_ = 0;
  int dim_ = 0;
  bool periodic_ = false;
  std::vector<Eigen::MatrixXd> basis_;
  Vec<double> structure_;

  void finalize();
};

/// Structure constants from matrix commutators; throws when the basis is not
/// closed under the bracket within 1e-10.
Vec<double> structure_constants(const MatrixLieGroup& g);

Eigen::VectorXd Ad(const MatrixLieGroup& g, const Eigen::MatrixXd& element, const Eigen::VectorXd& xi);
Eigen::VectorXd ad(const MatrixLieGroup& g, const Eigen::VectorXd& xi, const Eigen::VectorXd& eta);
/// coad(xi, mu)_alpha = c^gamma_{beta alpha} xi^beta mu_gamma, so <coad(xi,mu), eta> = <mu, ad(xi,eta)>.
Eigen::VectorXd coad(const MatrixLieGroup& g, const Eigen::VectorXd& xi, const Eigen::VectorXd& mu);

// ---- scalar-generic algebra kernels ----

/// [x, y]^gamma = c^gamma_{alpha beta} x^alpha y^beta.
template <class T>
Vec<T> bracket_t(const Vec<double>& c, int k, const Vec<T>& x, const Vec<T>& y) {
  Vec<T> out(k, T(0.0));
  for (int g = 0; g < k; ++g) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const double cc = c[(static_cast<size_t>(g) * k + a) * k + b];
        if (cc != 0.0) out[g] += cc * (x[a] * y[b]);
      }
    }
  }
  return out;
}

/// sum_{j=0}^{terms-1} sign^j / (j+1)! ad_y^j ydot. sign = -1 gives the
/// left-trivialized derivative of exp, sign = +1 the right-trivialized one.
template <class T>
Vec<T> dexp_series_t(const Vec<double>& c, int k, const Vec<T>& y, const Vec<T>& ydot, double sign,
                     int terms = 20) {
  Vec<T> term = ydot;
  Vec<T> out = ydot;
  double fact = 1.0;
  for (int j = 1; j < terms; ++j) {
    term = bracket_t(c, k, y, term);
    fact *= static_cast<double>(j + 1);
    const double coef = (j % 2 == 1 ? sign : 1.0) / fact;
    for (int a = 0; a < k; ++a) out[a] += coef * term[a];
  }
  return out;
}

/// Coefficients sin r / r, (1 - cos r)/r^2, (r - sin r)/r^3 as functions of r^2,
/// smooth at r = 0 for every scalar level.
template <class T>
void so3_coefficients_t(const T& r2, T& s1, T& s2, T& s3) {
  if (value_of(r2) < 0.25) {
    // Alternating series in r^2; 12 terms reach double precision for r^2 < 0.25.
    T p(1.0);
    s1 = T(0.0);
    s2 = T(0.0);
    s3 = T(0.0);
    double f1 = 1.0;  // (2j+1)!
    double f2 = 2.0;  // (2j+2)!
    double f3 = 6.0;  // (2j+3)!
    for (int j = 0; j < 12; ++j) {
      const double sg = (j % 2 == 0) ? 1.0 : -1.0;
      s1 += (sg / f1) * p;
      s2 += (sg / f2) * p;
      s3 += (sg / f3) * p;
      p = p * r2;
      f1 *= static_cast<double>((2 * j + 2) * (2 * j + 3));
      f2 *= static_cast<double>((2 * j + 3) * (2 * j + 4));
      f3 *= static_cast<double>((2 * j + 4) * (2 * j + 5));
    }
    return;
  }
  T r = smath::sqrt(r2);
  T sn = smath::sin(r);
  T cs = smath::cos(r);
  s1 = sn / r;
  s2 = (1.0 - cs) / r2;
  s3 = (r - sn) / (r2 * r);
}

/// Skew matrix of w (row-major 3x3).
template <class T>
std::array<T, 9> skew3_t(const T& w0, const T& w1, const T& w2) {
  return {T(0.0), -w2, w1, w2, T(0.0), -w0, -w1, w0, T(0.0)};
}

template <class T>
std::array<T, 9> matmul3_t(const std::array<T, 9>& a, const std::array<T, 9>& b) {
  std::array<T, 9> out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      T s(0.0);
      for (int l = 0; l < 3; ++l) s += a[i * 3 + l] * b[l * 3 + j];
      out[i * 3 + j] = s;
    }
  }
  return out;
}

/// Rodrigues exp of the skew matrix of theta.
template <class T>
std::array<T, 9> so3_exp_t(const T& t0, const T& t1, const T& t2) {
  T r2 = t0 * t0 + t1 * t1 + t2 * t2;
  T s1, s2, s3;
  so3_coefficients_t(r2, s1, s2, s3);
  auto k = skew3_t(t0, t1, t2);
  auto k2 = matmul3_t(k, k);
  std::array<T, 9> out;
  for (int i = 0; i < 9; ++i) out[i] = s1 * k[i] + s2 * k2[i];
  out[0] += 1.0;
  out[4] += 1.0;
  out[8] += 1.0;
  return out;
}

/// Body velocity g^{-1} d/dt exp(theta) = J(theta) thetadot with
/// J = I - (1 - cos r)/r^2 K + (r - sin r)/r^3 K^2.
template <class T>
std::array<T, 3> so3_body_velocity_t(const T& t0, const T& t1, const T& t2, const T& d0, const T& d1,
                                     const T& d2) {
  T r2 = t0 * t0 + t1 * t1 + t2 * t2;
  T s1, s2, s3;
  so3_coefficients_t(r2, s1, s2, s3);
  // K d = theta x d; K^2 d = theta x (theta x d)
  T c0 = t1 * d2 - t2 * d1;
  T c1 = t2 * d0 - t0 * d2;
  T c2 = t0 * d1 - t1 * d0;
  T cc0 = t1 * c2 - t2 * c1;
  T cc1 = t2 * c0 - t0 * c2;
  T cc2 = t0 * c1 - t1 * c0;
  return {d0 - s2 * c0 + s3 * cc0, d1 - s2 * c1 + s3 * cc1, d2 - s2 * c2 + s3 * cc2};
}

template <class T>
Vec<T> MatrixLieGroup::exp_t(const Vec<T>& xi) const {
  const int n = msize_;
  Vec<T> out(static_cast<size_t>(n) * n, T(0.0));
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i) * n + i] = T(1.0);
  switch (kind_) {
    case GroupKind::SO3: {
      auto r = so3_exp_t(xi[0], xi[1], xi[2]);
      for (int i = 0; i < 9; ++i) out[i] = r[i];
      break;
    }
    case GroupKind::Heisenberg: {
      // exp(M) = I + M + M^2/2 with M^2 = x y E_02.
      out[1] = xi[0];
      out[5] = xi[1];
      out[2] = xi[2] + 0.5 * xi[0] * xi[1];
      break;
    }
    case GroupKind::Abelian: {
      for (int i = 0; i < dim_; ++i) out[static_cast<size_t>(i) * n + dim_] = xi[i];
      break;
    }
  }
  return out;
}

}  // namespace lpmech
