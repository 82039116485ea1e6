#include "lpmech/smoothmap.hpp"

#include <cmath>

namespace lpmech {

Vec<double> to_vec(const Eigen::VectorXd& x) { return Vec<double>(x.data(), x.data() + x.size()); }

Eigen::VectorXd to_eigen(const Vec<double>& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()));
  for (size_t i = 0; i < x.size(); ++i) out[static_cast<Eigen::Index>(i)] = x[i];
  return out;
}

Eigen::VectorXd eval(const SmoothMap& f, const Eigen::VectorXd& x) { return to_eigen(f.apply(to_vec(x))); }

Eigen::MatrixXd jacobian(const SmoothMap& f, const Eigen::VectorXd& x) {
  if (x.size() != f.in_dim()) throw DimensionMismatch("jacobian: input length mismatch");
  Vec<double> j = jacobian_t(f, to_vec(x));
  Eigen::MatrixXd out(f.out_dim(), f.in_dim());
  for (int r = 0; r < f.out_dim(); ++r) {
    for (int c = 0; c < f.in_dim(); ++c) out(r, c) = j[static_cast<size_t>(r) * f.in_dim() + c];
  }
  return out;
}

Eigen::MatrixXd fd_jacobian(const SmoothMap& f, const Eigen::VectorXd& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_jacobian: step must be positive");
  if (x.size() != f.in_dim()) throw DimensionMismatch("fd_jacobian: input length mismatch");
  Eigen::MatrixXd out(f.out_dim(), f.in_dim());
  Vec<double> xp = to_vec(x);
  for (int i = 0; i < f.in_dim(); ++i) {
    const double step = h * (1.0 + std::abs(x[i]));
    const double xi = xp[i];
    xp[i] = xi + step;
    Vec<double> fp = f.apply(xp);
    xp[i] = xi - step;
    Vec<double> fm = f.apply(xp);
    xp[i] = xi;
    for (int r = 0; r < f.out_dim(); ++r) out(r, i) = (fp[r] - fm[r]) / (2.0 * step);
  }
  return out;
}

Eigen::MatrixXd hessian(const SmoothMap& f, const Eigen::VectorXd& x) {
  if (x.size() != f.in_dim()) throw DimensionMismatch("hessian: input length mismatch");
  auto vgh = value_grad_hess_t(f, to_vec(x));
  const int n = f.in_dim();
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = vgh.hess[static_cast<size_t>(i) * n + j];
  }
  return out;
}

SmoothMap identity_map(int dim) {
  return SmoothMap::make(dim, dim, [](const auto& x) { return x; });
}

SmoothMap constant_map(int in_dim, const Eigen::VectorXd& value) {
  Vec<double> c = to_vec(value);
  const int out = static_cast<int>(c.size());
  return SmoothMap::make(in_dim, out, [c](const auto& x) {
    using T = scalar_of<decltype(x)>;
    Vec<T> y(c.size());
    for (size_t i = 0; i < c.size(); ++i) y[i] = T(c[i]);
    return y;
  });
}

SmoothMap linear_map(const Eigen::MatrixXd& a) {
  const int rows = static_cast<int>(a.rows());
  const int cols = static_cast<int>(a.cols());
  Eigen::MatrixXd coef = a;
  return SmoothMap::make(cols, rows, [coef, rows, cols](const auto& x) {
    using T = scalar_of<decltype(x)>;
    Vec<T> y(rows, T(0.0));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) y[r] += coef(r, c) * x[c];
    }
    return y;
  });
}

}  // namespace lpmech
