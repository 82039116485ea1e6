#pragma once

#include <cmath>
#include <type_traits>

namespace lpmech {

/// Forward-mode dual number: value plus one infinitesimal direction.
/// Nesting Dual<Dual<double>> carries mixed second derivatives.
template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(double x) : v(x), d(0.0) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(const T& value, const T& infinitesimal) : v(value), d(infinitesimal) {}
  template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
  constexpr Dual(const T& value) : v(value), d(0.0) {}  // NOLINT(google-explicit-constructor)

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
  friend Dual operator+(const Dual& a) { return a; }
  friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend Dual operator/(const Dual& a, const Dual& b) {
    T inv = T(1.0) / b.v;
    return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
  }

  friend Dual operator+(const Dual& a, double s) { return {a.v + s, a.d}; }
  friend Dual operator+(double s, const Dual& a) { return {a.v + s, a.d}; }
  friend Dual operator-(const Dual& a, double s) { return {a.v - s, a.d}; }
  friend Dual operator-(double s, const Dual& a) { return {s - a.v, -a.d}; }
  friend Dual operator*(const Dual& a, double s) { return {a.v * s, a.d * s}; }
  friend Dual operator*(double s, const Dual& a) { return {a.v * s, a.d * s}; }
  friend Dual operator/(const Dual& a, double s) { return {a.v / s, a.d / s}; }
  friend Dual operator/(double s, const Dual& a) { return Dual(s) / a; }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
  friend bool operator<(const Dual& a, double s) { return a.v < s; }
  friend bool operator>(const Dual& a, double s) { return a.v > s; }
  friend bool operator<=(const Dual& a, double s) { return a.v <= s; }
  friend bool operator>=(const Dual& a, double s) { return a.v >= s; }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

/// Nesting depth: 0 for double, k for k nested duals.
template <class T>
struct ad_level : std::integral_constant<int, 0> {};
template <class T>
struct ad_level<Dual<T>> : std::integral_constant<int, 1 + ad_level<T>::value> {};
template <class T>
inline constexpr int ad_level_v = ad_level<T>::value;

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) { return value_of(x.v); }

template <class T>
Dual<T> sin(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {sin(x.v), cos(x.v) * x.d};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return {cos(x.v), -(sin(x.v) * x.d)};
}
template <class T>
Dual<T> exp(const Dual<T>& x) {
  using std::exp;
  T e = exp(x.v);
  return {e, e * x.d};
}
template <class T>
Dual<T> log(const Dual<T>& x) {
  using std::log;
  return {log(x.v), x.d / x.v};
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  T r = sqrt(x.v);
  return {r, x.d / (2.0 * r)};
}
template <class T>
Dual<T> tanh(const Dual<T>& x) {
  using std::tanh;
  T t = tanh(x.v);
  return {t, (1.0 - t * t) * x.d};
}
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  T den = x.v * x.v + y.v * y.v;
  return {atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / den};
}
template <class T>
Dual<T> pow(const Dual<T>& x, int n) {
  Dual<T> r(1.0);
  Dual<T> base = x;
  int k = n < 0 ? -n : n;
  while (k > 0) {
    if (k & 1) r = r * base;
    base = base * base;
    k >>= 1;
  }
  return n < 0 ? Dual<T>(1.0) / r : r;
}

/// Scalar-generic math entry points usable on double and any dual level.
namespace smath {
template <class T>
T sin(const T& x) { using std::sin; return sin(x); }
template <class T>
T cos(const T& x) { using std::cos; return cos(x); }
template <class T>
T exp(const T& x) { using std::exp; return exp(x); }
template <class T>
T log(const T& x) { using std::log; return log(x); }
template <class T>
T sqrt(const T& x) { using std::sqrt; return sqrt(x); }
template <class T>
T tanh(const T& x) { using std::tanh; return tanh(x); }
template <class T>
T atan2(const T& y, const T& x) { using std::atan2; return atan2(y, x); }
template <class T>
T pow(const T& x, int n) {
  if constexpr (std::is_same_v<T, double>) {
    return std::pow(x, n);
  } else {
    return lpmech::pow(x, n);
  }
}
}  // namespace smath

}  // namespace lpmech
