#pragma once

#include <cstdint>
#include <string>

#include "error.hpp"

namespace redt {

// Number of ordered K-tuples of non-negative integers summing to N, i.e. the
// number of distinct hard-label class-count vectors an N-sample node can
// have: C(N + K - 1, K - 1). Throws OverflowError instead of wrapping.
inline std::uint64_t lemma1_count(std::uint64_t n, std::uint64_t k) {
  if (k < 1) throw InvalidArgument("number of classes must be at least 1");
  // C(N+K-1, r) with r = min(K-1, N) keeps the loop short.
  const std::uint64_t top = n + k - 1;
  if (top < n) throw OverflowError("N + K - 1 overflows");
  std::uint64_t r = k - 1 < n ? k - 1 : n;
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    // acc * (top - r + i) / i stays exact: acc = C(top - r + i - 1, i - 1).
    acc = acc * (top - r + i) / i;
    if (acc > UINT64_MAX)
      throw OverflowError("C(" + std::to_string(top) + ", " +
                          std::to_string(k - 1) + ") exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace redt
