#pragma once

#include <vector>

#include "lpmech/random.hpp"
#include "lpmech/smoothmap.hpp"

namespace lpmech {

/// Monomial coef * prod_k x_k^exps[k].
struct Monomial {
  double coef = 0.0;
  std::vector<int> exps;
};

/// One polynomial per output component.
struct PolynomialTable {
  int in_dim = 0;
  std::vector<std::vector<Monomial>> outputs;
};

template <class T>
T eval_monomial_t(const Monomial& mono, const Vec<T>& x) {
  T r(mono.coef);
  for (size_t k = 0; k < mono.exps.size(); ++k) {
    for (int p = 0; p < mono.exps[k]; ++p) r = r * x[k];
  }
  return r;
}

template <class T>
Vec<T> eval_polynomials_t(const PolynomialTable& table, const Vec<T>& x) {
  Vec<T> y(table.outputs.size(), T(0.0));
  for (size_t o = 0; o < table.outputs.size(); ++o) {
    for (const Monomial& mono : table.outputs[o]) y[o] += eval_monomial_t(mono, x);
  }
  return y;
}

/// Throws InvalidArgument for negative exponents or exponent lists of the wrong length.
void validate_table(const PolynomialTable& table);

SmoothMap polynomial_map(const PolynomialTable& table);

/// Dense random polynomial of total degree <= degree with N(0, scale^2) coefficients.
PolynomialTable random_polynomial_table(int in_dim, int out_dim, int degree, double scale, Rng& rng);

}  // namespace lpmech
