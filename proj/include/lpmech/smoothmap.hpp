#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lpmech/dual.hpp"
#include "lpmech/errors.hpp"

namespace lpmech {

template <class T>
using Vec = std::vector<T>;

/// Scalar type of a Vec<T> argument inside generic lambdas.
template <class V>
using scalar_of = typename std::decay_t<V>::value_type;

/// Smooth map R^a -> R^b evaluable on double and on dual numbers up to a
/// fixed nesting level. Immutable and cheap to copy.
class SmoothMap {
 public:
  SmoothMap() = default;

  /// Wraps a generic callable `f(const Vec<T>&) -> Vec<T>`. Levels above
  /// MaxLevel are left unset; evaluating them throws.
  template <int MaxLevel = 3, class F>
  static SmoothMap make(int in_dim, int out_dim, F f) {
    static_assert(MaxLevel >= 0 && MaxLevel <= 3);
    if (in_dim < 0 || out_dim < 0) throw InvalidArgument("SmoothMap: negative dimension");
    auto impl = std::make_shared<Impl>();
    impl->in = in_dim;
    impl->out = out_dim;
    impl->max_level = MaxLevel;
    impl->f0 = [f](const Vec<double>& x) { return Vec<double>(f(x)); };
    if constexpr (MaxLevel >= 1) impl->f1 = [f](const Vec<D1>& x) { return Vec<D1>(f(x)); };
    if constexpr (MaxLevel >= 2) impl->f2 = [f](const Vec<D2>& x) { return Vec<D2>(f(x)); };
    if constexpr (MaxLevel >= 3) impl->f3 = [f](const Vec<D3>& x) { return Vec<D3>(f(x)); };
    SmoothMap m;
    m.impl_ = std::move(impl);
    return m;
  }

  bool valid() const { return static_cast<bool>(impl_); }
  int in_dim() const { return impl_ ? impl_->in : 0; }
  int out_dim() const { return impl_ ? impl_->out : 0; }
  int max_level() const { return impl_ ? impl_->max_level : -1; }

  template <class T>
  Vec<T> apply(const Vec<T>& x) const {
    if (!impl_) throw InvalidArgument("SmoothMap: empty map");
    if (static_cast<int>(x.size()) != impl_->in) {
      throw DimensionMismatch("SmoothMap: input length " + std::to_string(x.size()) +
                              ", expected " + std::to_string(impl_->in));
    }
    constexpr int level = ad_level_v<T>;
    Vec<T> y;
    if constexpr (level == 0) {
      y = impl_->f0(x);
    } else if constexpr (level == 1) {
      if (!impl_->f1) throw UnsupportedDerivativeLevel("SmoothMap: level 1 unavailable");
      y = impl_->f1(x);
    } else if constexpr (level == 2) {
      if (!impl_->f2) throw UnsupportedDerivativeLevel("SmoothMap: level 2 unavailable");
      y = impl_->f2(x);
    } else {
      static_assert(level == 3, "SmoothMap supports at most three nested dual levels");
      if (!impl_->f3) throw UnsupportedDerivativeLevel("SmoothMap: level 3 unavailable");
      y = impl_->f3(x);
    }
    if (static_cast<int>(y.size()) != impl_->out) {
      throw DimensionMismatch("SmoothMap: body returned " + std::to_string(y.size()) +
                              " outputs, expected " + std::to_string(impl_->out));
    }
    return y;
  }

 private:
  struct Impl {
    int in = 0;
    int out = 0;
    int max_level = 0;
    std::function<Vec<double>(const Vec<double>&)> f0;
    std::function<Vec<D1>(const Vec<D1>&)> f1;
    std::function<Vec<D2>(const Vec<D2>&)> f2;
    std::function<Vec<D3>(const Vec<D3>&)> f3;
  };
  std::shared_ptr<const Impl> impl_;
};

// ---- generic derivative kernels (scalar type T one level below the map's top) ----

/// Row-major out x in Jacobian at x, one dual pass per input direction.
template <class T>
Vec<T> jacobian_t(const SmoothMap& f, const Vec<T>& x) {
  const int n = f.in_dim();
  const int m = f.out_dim();
  Vec<T> jac(static_cast<size_t>(n) * m, T(0.0));
  Vec<Dual<T>> xd(x.size());
  for (int j = 0; j < n; ++j) xd[j] = Dual<T>(x[j], T(0.0));
  for (int i = 0; i < n; ++i) {
    xd[i].d = T(1.0);
    Vec<Dual<T>> y = f.apply(xd);
    for (int r = 0; r < m; ++r) jac[static_cast<size_t>(r) * n + i] = y[r].d;
    xd[i].d = T(0.0);
  }
  return jac;
}

/// Directional derivative Df(x)[dir].
template <class T>
Vec<T> jvp_t(const SmoothMap& f, const Vec<T>& x, const Vec<T>& dir) {
  Vec<Dual<T>> xd(x.size());
  for (size_t j = 0; j < x.size(); ++j) xd[j] = Dual<T>(x[j], dir[j]);
  Vec<Dual<T>> y = f.apply(xd);
  Vec<T> out(y.size());
  for (size_t r = 0; r < y.size(); ++r) out[r] = y[r].d;
  return out;
}

/// Gradient of a scalar map.
template <class T>
Vec<T> gradient_t(const SmoothMap& f, const Vec<T>& x) {
  if (f.out_dim() != 1) throw DimensionMismatch("gradient: map is not scalar");
  return jacobian_t(f, x);
}

/// Value, gradient and symmetric Hessian (row-major) of a scalar map via
/// dual-over-dual passes on the upper triangle.
template <class T>
struct ValueGradHess {
  T value{};
  Vec<T> grad;
  Vec<T> hess;
};

template <class T>
ValueGradHess<T> value_grad_hess_t(const SmoothMap& f, const Vec<T>& x) {
  if (f.out_dim() != 1) throw DimensionMismatch("hessian: map is not scalar");
  using DD = Dual<Dual<T>>;
  const int n = f.in_dim();
  ValueGradHess<T> r;
  r.grad.assign(n, T(0.0));
  r.hess.assign(static_cast<size_t>(n) * n, T(0.0));
  Vec<DD> xd(n);
  for (int k = 0; k < n; ++k) xd[k] = DD(Dual<T>(x[k], T(0.0)), Dual<T>(T(0.0), T(0.0)));
  if (n == 0) {
    r.value = f.apply(x)[0];
    return r;
  }
  for (int i = 0; i < n; ++i) {
    xd[i].v.d = T(1.0);
    for (int j = i; j < n; ++j) {
      xd[j].d.v = T(1.0);
      DD y = f.apply(xd)[0];
      r.hess[static_cast<size_t>(i) * n + j] = y.d.d;
      r.hess[static_cast<size_t>(j) * n + i] = y.d.d;
      if (i == j) {
        r.grad[i] = y.v.d;
        r.value = y.v.v;
      }
      xd[j].d.v = T(0.0);
    }
    xd[i].v.d = T(0.0);
  }
  return r;
}

// ---- double-level API ----

Vec<double> to_vec(const Eigen::VectorXd& x);
Eigen::VectorXd to_eigen(const Vec<double>& x);

/// f(x) on real inputs.
Eigen::VectorXd eval(const SmoothMap& f, const Eigen::VectorXd& x);

/// Exact Jacobian (out_dim x in_dim) by dual propagation.
Eigen::MatrixXd jacobian(const SmoothMap& f, const Eigen::VectorXd& x);

/// Central differences with per-coordinate step h * (1 + |x_i|); h must be positive.
Eigen::MatrixXd fd_jacobian(const SmoothMap& f, const Eigen::VectorXd& x, double h = 1e-5);

/// Hessian of a scalar map by dual-over-dual.
Eigen::MatrixXd hessian(const SmoothMap& f, const Eigen::VectorXd& x);

// ---- small constructors ----

SmoothMap identity_map(int dim);
SmoothMap constant_map(int in_dim, const Eigen::VectorXd& value);
SmoothMap linear_map(const Eigen::MatrixXd& a);

}  // namespace lpmech
