#include <gtest/gtest.h>

#include <cmath>

#include "maqp/rate.hpp"

using namespace maqp;

TEST(EstimateRate, GeometricSequence) {
  std::vector<double> g;
  for (int k = 0; k < 40; ++k) g.push_back(std::pow(2.0, -k));
  const RateFit f = estimate_rate(g);
  EXPECT_NEAR(f.slope, std::log10(2.0), 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_NEAR(f.contraction, 2.0, 1e-10);
  EXPECT_TRUE(f.linear());
  EXPECT_EQ(f.points, 20);
  EXPECT_EQ(f.first_k, 20);
  EXPECT_EQ(f.last_k, 39);
}

TEST(EstimateRate, SublinearSequenceIsNotLinear) {
  // The tail of 1/k is nearly straight on a log scale, so the full window is used.
  std::vector<double> g;
  for (int k = 1; k <= 10000; ++k) g.push_back(1.0 / k);
  const RateFit f = estimate_rate(g, 1.0);
  EXPECT_LT(f.r2, 0.9);
  EXPECT_FALSE(f.linear());
}

TEST(EstimateRate, StopsAtFloor) {
  std::vector<double> g;
  for (int k = 0; k < 60; ++k) g.push_back(std::pow(2.0, -k));
  // 2^-43 is the last entry above 1e-13. Noise after the floor must not enter the fit.
  g[50] = 1e-9;
  const RateFit f = estimate_rate(g, 1.0);
  EXPECT_EQ(f.last_k, 43);
  EXPECT_NEAR(f.slope, std::log10(2.0), 1e-12);
}

TEST(EstimateRate, InsufficientData) {
  EXPECT_THROW(estimate_rate(std::vector<double>(19, 1.0)), InsufficientDataError);
  std::vector<double> g(25, 0.0);
  g[0] = 1.0;
  g[1] = 0.5;
  EXPECT_THROW(estimate_rate(g), InsufficientDataError);
  EXPECT_THROW(estimate_rate(std::vector<double>(25, 1.0), 0.0), InsufficientDataError);
}

TEST(EstimateRate, IncreasingGapHasNegativeSlope) {
  std::vector<double> g;
  for (int k = 0; k < 25; ++k) g.push_back(std::pow(1.5, k));
  const RateFit f = estimate_rate(g);
  EXPECT_LT(f.slope, 0.0);
  EXPECT_FALSE(f.linear());
}

TEST(Gaps, FromHistoryUsesExtendedValue) {
  std::vector<IterationRecord> h(3);
  h[0].lagrangian_ext = 1.0L + 1e-15L;
  h[1].lagrangian_ext = 1.0L + 1e-16L;
  h[2].lagrangian_ext = 1.0L;
  const auto g = gaps(h, 1.0L);
  EXPECT_NEAR(g[0], 1e-15, 1e-18);
  if (sizeof(long double) > sizeof(double)) {
    EXPECT_NEAR(g[1], 1e-16, 1e-18);
  }
  EXPECT_EQ(g[2], 0.0);
}
