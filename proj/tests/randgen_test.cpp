#include "tenkit/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace tenkit;

namespace {

TEST(RngStream, DeterministicAndStreamSeparated) {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  bool differs = false;
  RngStream a2(42, 7);
  for (int i = 0; i < 16; ++i) differs |= a2.next_u64() != c.next_u64();
  EXPECT_TRUE(differs);
}

TEST(RngStream, CounterAddressable) {
  RngStream a(1, 2), b(1, 2);
  a.next_u64();
  a.next_u64();
  b.skip(2);
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, UnitRanges) {
  RngStream g(3, 0);
  for (int i = 0; i < 10000; ++i) {
    double u = g.next_unit();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    double v = g.next_unit_oo();
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(RngStream, ChildIndependentOfCounter) {
  RngStream g(9, 1);
  RngStream c1 = g.child(4, 11);
  g.next_u64();
  RngStream c2 = g.child(4, 11);
  EXPECT_EQ(c1.next_u64(), c2.next_u64());
}

TEST(BoxMuller, MomentsMatch) {
  RngStream g(0, 0);
  const int n = 1000000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    double v = box_muller(g, 10.0, 3.0);
    sum += v;
    sum2 += v * v;
  }
  double mean = sum / n;
  double sd = std::sqrt(sum2 / n - mean * mean);
  EXPECT_NEAR(mean, 10.0, 0.02);
  EXPECT_NEAR(sd, 3.0, 0.02);
}

TEST(BoxMuller, ZeroStdIsExact) {
  RngStream g(1, 1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(box_muller(g, 4.5, 0.0), 4.5);
}

TEST(BoxMuller, RejectsNegativeStd) {
  RngStream g(1, 1);
  EXPECT_THROW(box_muller(g, 0.0, -1.0), DomainError);
}

TEST(LognormalParams, ClosedForm) {
  auto [mu, sigma] = lognormal_params(2.0, 2.0);
  EXPECT_NEAR(mu, 0.34657359027997264, 1e-15);        // log(sqrt(2))
  EXPECT_NEAR(sigma, 0.83255461115769769, 1e-15);     // sqrt(log 2)
}

TEST(LognormalParams, SampledMeanMatches) {
  auto [mu, sigma] = lognormal_params(2.0, 2.0);
  RngStream g(5, 0);
  const int n = 1000000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += std::exp(box_muller(g, mu, sigma));
  EXPECT_NEAR(sum / n, 2.0, 0.04);  // 2%
}

TEST(LognormalParams, RejectsBadDomain) {
  EXPECT_THROW(lognormal_params(0.0, 1.0), DomainError);
  EXPECT_THROW(lognormal_params(-2.0, 1.0), DomainError);
  EXPECT_THROW(lognormal_params(1.0, -1.0), DomainError);
}

TEST(RandInds, FullRangeAndEmpty) {
  RngStream g(0, 3);
  EXPECT_EQ(rand_inds(g, 5, 5), (std::vector<u64>{1, 2, 3, 4, 5}));
  EXPECT_TRUE(rand_inds(g, 0, 10).empty());
}

TEST(RandInds, CapacityError) {
  RngStream g(0, 3);
  EXPECT_THROW(rand_inds(g, 6, 5), CapacityError);
}

TEST(RandInds, DistinctSortedInRange) {
  RngStream g(7, 0);
  for (int rep = 0; rep < 200; ++rep) {
    u64 limit = 1 + g.next_index(400);
    u64 n = g.next_index(limit + 1);
    auto v = rand_inds(g, n, limit);
    ASSERT_EQ(v.size(), n);
    std::set<u64> uniq(v.begin(), v.end());
    EXPECT_EQ(uniq.size(), n);
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
    for (u64 x : v) {
      EXPECT_GE(x, 1u);
      EXPECT_LE(x, limit);
    }
  }
}

// Each index should appear with frequency n/limit; both sampler regimes.
TEST(RandInds, UniformFrequency) {
  for (u64 n : {1ull, 3ull}) {
    RngStream g(11, n);
    const int trials = 100000;
    std::vector<int> freq(4, 0);
    for (int t = 0; t < trials; ++t)
      for (u64 x : rand_inds(g, n, 4)) freq[x - 1]++;
    for (int i = 0; i < 4; ++i)
      EXPECT_NEAR(freq[i] / double(trials), n / 4.0, 0.01) << "index " << i;
  }
}

TEST(Distribute, ZeroVarianceExact) {
  RngStream s(0, 1);
  auto r = distribute(s, 4, 5.0, 0.0, 10.0, 10);
  EXPECT_EQ(r.cnt, (std::vector<u64>{5, 5, 5, 5}));
  for (u64 i = 0; i < 4; ++i) {
    auto ix = r.inds(i);
    EXPECT_EQ(ix.size(), 5u);
    std::set<u64> uniq(ix.begin(), ix.end());
    EXPECT_EQ(uniq.size(), 5u);
  }
  EXPECT_EQ(r.clamped, 0u);
}

TEST(Distribute, NormalBranchMeanWindow) {
  RngStream s(0, 2);
  auto r = distribute(s, 10000, 8.0, 2.0, 100.0, 1000);
  double sum = 0;
  for (u64 c : r.cnt) sum += double(c);
  double mean = sum / r.cnt.size();
  EXPECT_GE(mean, 0.95 * 8.0);
  EXPECT_LE(mean, 1.05 * 8.0);
  EXPECT_LT(double(r.clamped) / r.cnt.size(), 0.01);
}

TEST(Distribute, LognormalBranchBounds) {
  RngStream s(0, 3);
  auto r = distribute(s, 20000, 2.0, 2.0, 10.0, 50);
  u64 total = 0;
  for (u64 i = 0; i < r.cnt.size(); ++i) {
    ASSERT_GE(r.cnt[i], 1u);
    ASSERT_LE(r.cnt[i], 10u);
    auto ix = r.inds(i);
    ASSERT_EQ(ix.size(), r.cnt[i]);
    ASSERT_TRUE(std::is_sorted(ix.begin(), ix.end()));
    ASSERT_GE(ix.front(), 1u);
    ASSERT_LE(ix.back(), 50u);
    std::set<u64> uniq(ix.begin(), ix.end());
    ASSERT_EQ(uniq.size(), ix.size());
    total += r.cnt[i];
  }
  EXPECT_GT(total, 0u);
}

TEST(Distribute, ReproducibleAcrossThreadCounts) {
  RngStream s(123, 9);
  DistributeOptions serial;
  DistributeOptions wide;
  wide.threads = 4;
  auto a = distribute(s, 5000, 6.0, 3.0, 40.0, 100, serial);
  auto b = distribute(s, 5000, 6.0, 3.0, 40.0, 100, wide);
  EXPECT_EQ(a.cnt, b.cnt);
  EXPECT_EQ(a.ind_flat, b.ind_flat);
  EXPECT_EQ(a.clamped, b.clamped);
}

TEST(Distribute, SeedChangesDraws) {
  auto a = distribute(RngStream(1, 0), 100, 6.0, 3.0, 40.0, 100);
  auto b = distribute(RngStream(2, 0), 100, 6.0, 3.0, 40.0, 100);
  EXPECT_NE(a.cnt, b.cnt);
}

TEST(Distribute, InfeasibleAverageFlagged) {
  RngStream s(0, 4);
  auto r = distribute(s, 16, 20.0, 1.0, 30.0, 10);
  EXPECT_TRUE(r.infeasible_average);
  for (u64 c : r.cnt) EXPECT_LE(c, 10u);  // cap at limit keeps inds feasible
}

TEST(Distribute, RejectsBadPreconditions) {
  RngStream s(0, 5);
  EXPECT_THROW(distribute(s, 0, 2.0, 1.0, 4.0, 10), DomainError);
  EXPECT_THROW(distribute(s, 4, 0.5, 1.0, 4.0, 10), DomainError);
  EXPECT_THROW(distribute(s, 4, 2.0, -1.0, 4.0, 10), DomainError);
  EXPECT_THROW(distribute(s, 4, 2.0, 1.0, 0.0, 10), DomainError);
  EXPECT_THROW(distribute(s, 4, 2.0, 1.0, 4.0, 0), DomainError);
}

}  // namespace
