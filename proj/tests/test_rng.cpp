// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mrx/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace {

TEST(Rng, ReproducibleStreams) {
  mrx::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, ChildStreamsIndependentOfParentPosition) {
  mrx::Rng a(7);
  mrx::Rng b(7);
  b.next_u64();  // advancing the parent must not move the children
  mrx::Rng ca = a.child(3), cb = b.child(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(ca.next_u64(), cb.next_u64());
  mrx::Rng other = a.child(4);
  EXPECT_NE(ca.next_u64(), other.next_u64());
}

TEST(Rng, UniformRange) {
  mrx::Rng rng(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(lo, 0.01);
  EXPECT_GT(hi, 0.99);
}

TEST(Rng, UniformIndexCoversAllValues) {
  mrx::Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) EXPECT_GT(c, 700);
}

TEST(Rng, PoissonMeanAndVariance) {
  mrx::Rng rng(11);
  const double lambda = 6.0;
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const int k = rng.poisson(lambda);
    sum += k;
    sum_sq += static_cast<double>(k) * k;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double se = std::sqrt(lambda / n);
  EXPECT_NEAR(mean, lambda, 4.0 * se);
  EXPECT_NEAR(var, lambda, 0.15);
}

}  // namespace
