#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "error.hpp"

namespace redt {

enum class Criterion { gini, entropy };

inline std::string_view to_string(Criterion c) {
  return c == Criterion::gini ? "gini" : "entropy";
}

inline Criterion parse_criterion(std::string_view s) {
  if (s == "gini") return Criterion::gini;
  if (s == "entropy") return Criterion::entropy;
  throw InvalidArgument("unknown criterion '" + std::string(s) + "'");
}

// Impurity of the distribution sums / total. `sums` may be unnormalized class
// mass (counts or summed label vectors); entries <= 0 contribute nothing, so
// 0 log 0 = 0 and tiny negative round-off from subtraction is ignored.
inline double impurity_from_sums(std::span<const double> sums, double total,
                                 Criterion c) {
  if (total <= 0.0) return 0.0;
  double acc = 0.0;
  if (c == Criterion::gini) {
    for (double s : sums) {
      double p = s / total;
      acc += p * p;
    }
    return 1.0 - acc;
  }
  for (double s : sums) {
    if (s <= 0.0) continue;
    double p = s / total;
    acc -= p * std::log(p);
  }
  return acc;
}

// Gini 1 - sum p_i^2, or Shannon entropy -sum p_i ln p_i.
inline double impurity(std::span<const double> p, Criterion c) {
  return impurity_from_sums(p, 1.0, c);
}

}  // namespace redt
