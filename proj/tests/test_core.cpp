#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "pcgssl/core/error.hpp"
#include "pcgssl/core/random.hpp"

using namespace pcgssl;

TEST(DeriveSeed, DependsOnEveryPathElement) {
  const auto base = derive_seed(42, {1, 2, 3});
  EXPECT_EQ(base, derive_seed(42, {1, 2, 3}));
  EXPECT_NE(base, derive_seed(43, {1, 2, 3}));
  EXPECT_NE(base, derive_seed(42, {1, 2, 4}));
  EXPECT_NE(base, derive_seed(42, {2, 1, 3}));
  EXPECT_NE(base, derive_seed(42, {1, 2}));
}

TEST(DeriveSeed, StageTagsAreStableAndDistinct) {
  EXPECT_EQ(tag("ssl.train"), tag("ssl.train"));
  EXPECT_NE(tag("ssl.train"), tag("ssl.val"));
  // FNV-1a of the empty string is the offset basis.
  EXPECT_EQ(tag(""), 0xcbf29ce484222325ULL);
}

TEST(Rng, Uniform01StaysInHalfOpenUnitInterval) {
  Rng rng(7);
  double lo = 1, hi = 0, sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(3);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) ++counts[rng.below(6)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, ShuffleIsASeededPermutation) {
  std::vector<int> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  Rng r1(11), r2(11);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 50u);
  std::vector<int> sorted(50);
  std::iota(sorted.begin(), sorted.end(), 0);
  EXPECT_NE(a, sorted);
}

TEST(Error, CarriesCodeAndMessage) {
  try {
    fail(Errc::StratumTooSmall, "stratum x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StratumTooSmall);
    EXPECT_NE(std::string(e.what()).find("stratum x"), std::string::npos);
  }
  EXPECT_EQ(to_string(Errc::DegenerateEmbedding), "DegenerateEmbedding");
}
