#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "noisecal/schedule.hpp"

using namespace noisecal;

TEST(LinearBetaSchedule, HandProductT4) {
  const NoiseSchedule s = linear_beta_schedule(4, 0.1, 0.4);
  const double alpha[] = {0.9, 0.8, 0.7, 0.6};
  const double alpha_bar[] = {1.0, 0.9, 0.72, 0.504, 0.3024};
  for (int t = 1; t <= 4; ++t) EXPECT_NEAR(s.alpha(t), alpha[t - 1], 1e-15);
  for (int t = 0; t <= 4; ++t) EXPECT_NEAR(s.alpha_bar(t), alpha_bar[t], 1e-15);
}

TEST(LinearBetaSchedule, SingleStep) {
  const NoiseSchedule s = linear_beta_schedule(1, 0.5, 0.5);
  EXPECT_EQ(s.T(), 1);
  EXPECT_EQ(s.alpha_bar(1), 0.5);
}

TEST(LinearBetaSchedule, RejectsBadParameters) {
  EXPECT_THROW(linear_beta_schedule(0, 1e-4, 0.02), DomainError);
  EXPECT_THROW(linear_beta_schedule(10, 0.0, 0.02), DomainError);
  EXPECT_THROW(linear_beta_schedule(10, 0.03, 0.02), DomainError);
  EXPECT_THROW(linear_beta_schedule(10, 1e-4, 1.0), DomainError);
}

TEST(LinearBetaSchedule, DefaultEndpointIsSmallButPositive) {
  const NoiseSchedule s = make_schedule({});
  EXPECT_EQ(s.T(), 1000);
  EXPECT_GT(s.alpha_bar(1000), 0.0);
  EXPECT_LT(s.alpha_bar(1000), 1e-4);
  EXPECT_NEAR(s.beta(1), 1e-4, 1e-15);
  EXPECT_NEAR(s.beta(1000), 0.02, 1e-15);
}

TEST(LinearBetaSchedule, RandomizedInvariants) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = std::uniform_int_distribution<int>(1, 2000)(gen);
    const double b0 = 1e-5 + 0.05 * u(gen);
    const double b1 = b0 + (0.06 - b0) * u(gen);
    const NoiseSchedule s = linear_beta_schedule(T, b0, b1);
    ASSERT_EQ(s.alpha_bar(0), 1.0);
    for (int t = 1; t <= T; ++t) {
      ASSERT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
      ASSERT_NEAR(s.alpha_bar(t), s.alpha_bar(t - 1) * s.alpha(t), 1e-15);
    }
    ASSERT_GT(s.alpha_bar(T), 0.0);
  }
}

TEST(NoiseSchedule, TimestepBoundsChecked) {
  const NoiseSchedule s = linear_beta_schedule(10, 0.01, 0.02);
  EXPECT_THROW((void)s.alpha_bar(11), DomainError);
  EXPECT_THROW((void)s.alpha_bar(-1), DomainError);
  EXPECT_THROW((void)s.alpha(0), DomainError);
}

TEST(DdimGrid, FullRange) {
  const NoiseSchedule s = make_schedule({});
  EXPECT_EQ(ddim_grid(s, 10, 1000), (TimestepGrid{1000, 900, 800, 700, 600, 500, 400, 300, 200, 100}));
}

TEST(DdimGrid, FilteredByT0) {
  const NoiseSchedule s = make_schedule({});
  EXPECT_EQ(ddim_grid(s, 10, 600), (TimestepGrid{600, 500, 400, 300, 200, 100}));
  EXPECT_EQ(ddim_grid(s, 10, 650), (TimestepGrid{600, 500, 400, 300, 200, 100}));
}

TEST(DdimGrid, EmptyBelowFirstPoint) {
  const NoiseSchedule s = make_schedule({});
  EXPECT_TRUE(ddim_grid(s, 10, 0).empty());
  EXPECT_TRUE(ddim_grid(s, 10, 99).empty());
}

TEST(DdimGrid, RoundsAndDeduplicates) {
  const NoiseSchedule s = linear_beta_schedule(7, 0.01, 0.02);
  // round(i·7/3) = 2, 5, 7
  EXPECT_EQ(ddim_grid(s, 3, 7), (TimestepGrid{7, 5, 2}));
  EXPECT_EQ(ddim_grid(s, 7, 7), (TimestepGrid{7, 6, 5, 4, 3, 2, 1}));
  EXPECT_THROW(ddim_grid(s, 0, 7), DomainError);
  EXPECT_THROW(ddim_grid(s, 8, 7), DomainError);
}

TEST(DdimGrid, PrefixFilterProperty) {
  std::mt19937_64 gen(5);
  const NoiseSchedule s = make_schedule({});
  for (int trial = 0; trial < 300; ++trial) {
    const int steps = std::uniform_int_distribution<int>(1, 1000)(gen);
    const int t0 = std::uniform_int_distribution<int>(0, 1000)(gen);
    const TimestepGrid full = ddim_grid(s, steps, 1000);
    const TimestepGrid part = ddim_grid(s, steps, t0);
    ASSERT_TRUE(std::is_sorted(part.rbegin(), part.rend()));
    ASSERT_EQ(std::adjacent_find(part.begin(), part.end()), part.end());
    for (Timestep t : part) {
      ASSERT_TRUE(std::find(full.begin(), full.end(), t) != full.end());
      ASSERT_LE(t, t0);
      ASSERT_GE(t, 1);
    }
    for (Timestep t : full) {
      if (t <= t0) ASSERT_TRUE(std::find(part.begin(), part.end(), t) != part.end());
    }
  }
}

TEST(SdeditGrid, StartsAtT0) {
  const NoiseSchedule s = make_schedule({});
  EXPECT_EQ(sdedit_grid(s, 10, 650), (TimestepGrid{650, 600, 500, 400, 300, 200, 100}));
  EXPECT_EQ(sdedit_grid(s, 10, 600), (TimestepGrid{600, 500, 400, 300, 200, 100}));
  EXPECT_EQ(sdedit_grid(s, 10, 40), (TimestepGrid{40}));
  EXPECT_TRUE(sdedit_grid(s, 10, 0).empty());
  EXPECT_EQ(sdedit_grid(s, 30, 600).size(), 18u);
}

TEST(ResolveT0, FractionOfT) {
  const NoiseSchedule s = make_schedule({});
  EXPECT_EQ(resolve_t0(0.6, s), 600);
  EXPECT_EQ(resolve_t0(1.0, s), 1000);
  EXPECT_THROW(resolve_t0(1.5, s), DomainError);
}
