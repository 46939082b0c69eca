#include <gtest/gtest.h>

#include <random>
#include <set>
#include <vector>

#include "redt/impurity.hpp"
#include "redt/lemma.hpp"
#include "support/oracles.hpp"

using namespace redt;

TEST(ProportionVectorCount, Examples) {
  EXPECT_EQ(lemma1_count(2, 2), 3u);
  EXPECT_EQ(lemma1_count(5, 3), 21u);
  EXPECT_EQ(lemma1_count(0, 4), 1u);
  EXPECT_EQ(lemma1_count(7, 1), 1u);
  EXPECT_EQ(lemma1_count(1, 10), 10u);
  EXPECT_THROW(lemma1_count(3, 0), InvalidArgument);
}

TEST(ProportionVectorCount, MatchesEnumeration) {
  for (std::size_t n = 0; n <= 8; ++n)
    for (std::size_t k = 1; k <= 3; ++k)
      EXPECT_EQ(lemma1_count(n, k), oracle::enumerate_proportion_vectors(n, k))
          << "N=" << n << " K=" << k;
}

TEST(ProportionVectorCount, MatchesBinomialTable) {
  for (std::uint64_t n = 0; n <= 40; ++n)
    for (std::uint64_t k = 1; k <= 12; ++k)
      EXPECT_EQ(lemma1_count(n, k), oracle::binomial(n + k - 1, k - 1));
}

TEST(ProportionVectorCount, OverflowIsReported) {
  // C(67, 33) fits in 64 bits, C(68, 34) does not.
  EXPECT_EQ(lemma1_count(34, 34), 14226520737620288370ull);
  EXPECT_THROW(lemma1_count(35, 35), OverflowError);
  EXPECT_THROW(lemma1_count(UINT64_MAX, 2), OverflowError);
  EXPECT_NO_THROW(lemma1_count(UINT64_MAX - 1, 2));
}

TEST(ProportionVectorCount, SoftLabelsGiveFinerImpurityValues) {
  // Hard labels on an N-sample node reach at most lemma1_count(N, K)
  // distinct proportion vectors; soft labels drawn from a pool reach more.
  const std::size_t n = 4, k = 2, pool = 10;
  std::set<double> hard;
  for (unsigned a = 0; a < (1u << n); ++a) {
    std::vector<double> sums(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) sums[a >> i & 1u] += 1.0;
    hard.insert(impurity_from_sums(sums, n, Criterion::gini));
  }
  EXPECT_LE(hard.size(), lemma1_count(n, k));

  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p0(pool);
  for (auto& v : p0) v = u(gen);
  std::set<double> soft;
  for (unsigned a = 0; a < (1u << pool); ++a) {
    if (__builtin_popcount(a) != static_cast<int>(n)) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < pool; ++i)
      if (a >> i & 1u) s += p0[i];
    std::vector<double> sums{s, n - s};
    soft.insert(impurity_from_sums(sums, n, Criterion::gini));
  }
  EXPECT_GT(soft.size(), lemma1_count(n, k));
  EXPECT_GT(soft.size(), hard.size());
}
