#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lexspec/rng.h"

namespace lexspec {
namespace {

TEST(Rng, FollowsTheStandardMersenneTwisterSequence) {
  // The 10000th output of a default-seeded mt19937_64 is fixed by the standard.
  Rng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ull);
  EXPECT_EQ(rng.draws(), 10000u);
}

TEST(Rng, UniformUsesTheTop53Bits) {
  Rng a(17);
  std::mt19937_64 b(17);
  for (int i = 0; i < 100; ++i) {
    const double expected = static_cast<double>(b() >> 11) * 0x1.0p-53;
    EXPECT_EQ(a.uniform(), expected);
  }
}

TEST(Rng, UniformIndexStaysInRangeAndCoversIt) {
  Rng rng(3);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::size_t k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    ++seen[k];
  }
  for (int c : seen) EXPECT_NEAR(c, 1000, 150);
}

TEST(Rng, NormalHasUnitMomentsAndConsumesTwoDraws) {
  Rng rng(9);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_EQ(rng.draws(), 2u * n);
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a.uniform_index(13), b.uniform_index(13));
  }
}

}  // namespace
}  // namespace lexspec
