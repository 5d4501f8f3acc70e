#include "ppcc/rng.hpp"

#include <gtest/gtest.h>

#include <map>

namespace ppcc {
namespace {

TEST(Rng, SameSeedSameSequence) {
  Rng a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, DifferentStreamsDiffer) {
  Rng a(mix64(7, kStreamWorkload)), b(mix64(7, kStreamTiming));
  int equal = 0;
  for (int i = 0; i < 100; ++i)
    if (a.next() == b.next()) ++equal;
  EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformIntCoversInclusiveRange) {
  Rng r(99);
  std::map<std::int64_t, int> seen;
  for (int i = 0; i < 20000; ++i) seen[r.uniform_int(10, 20)]++;
  EXPECT_EQ(seen.size(), 11u);
  EXPECT_EQ(seen.begin()->first, 10);
  EXPECT_EQ(seen.rbegin()->first, 20);
  for (const auto& [v, n] : seen) EXPECT_GT(n, 20000 / 11 / 2) << v;
}

TEST(Rng, BernoulliMatchesProbability) {
  Rng r(4242);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i)
    if (r.bernoulli(0.2)) ++hits;
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.2, 0.005);
  EXPECT_FALSE(Rng(1).bernoulli(0.0));
  EXPECT_TRUE(Rng(1).bernoulli(1.0));
}

TEST(Rng, Mix64OrderSensitive) {
  EXPECT_NE(mix64(1, 2), mix64(2, 1));
  EXPECT_NE(mix64(1, 2, 3), mix64(1, 2, 4));
  EXPECT_EQ(mix64(5, 6, 7), mix64(5, 6, 7));
}

}  // namespace
}  // namespace ppcc
