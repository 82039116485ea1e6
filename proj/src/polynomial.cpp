#include "lpmech/polynomial.hpp"

#include <functional>

namespace lpmech {

void validate_table(const PolynomialTable& table) {
  if (table.in_dim < 0) throw InvalidArgument("polynomial: negative input dimension");
  for (const auto& poly : table.outputs) {
    for (const Monomial& mono : poly) {
      if (static_cast<int>(mono.exps.size()) != table.in_dim) {
        throw InvalidArgument("polynomial: exponent list has length " + std::to_string(mono.exps.size()) +
                              ", expected " + std::to_string(table.in_dim));
      }
      for (int e : mono.exps) {
        if (e < 0) throw InvalidArgument("polynomial: negative exponent");
      }
    }
  }
}

SmoothMap polynomial_map(const PolynomialTable& table) {
  validate_table(table);
  return SmoothMap::make(table.in_dim, static_cast<int>(table.outputs.size()),
                         [table](const auto& x) { return eval_polynomials_t(table, x); });
}

PolynomialTable random_polynomial_table(int in_dim, int out_dim, int degree, double scale, Rng& rng) {
  PolynomialTable table;
  table.in_dim = in_dim;
  table.outputs.resize(out_dim);
  std::vector<std::vector<int>> exps;
  std::vector<int> cur(in_dim, 0);
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == in_dim) {
      exps.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[k] = e;
      rec(k + 1, left - e);
    }
    cur[k] = 0;
  };
  rec(0, degree);
  for (int o = 0; o < out_dim; ++o) {
    for (const auto& e : exps) table.outputs[o].push_back({scale * rng.normal(), e});
  }
  return table;
}

}  // namespace lpmech
