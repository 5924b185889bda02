#include <gtest/gtest.h>

#include <limits>

#include "replayirl/rewards.hpp"
#include "support.hpp"

using namespace replayirl;
using namespace replayirl::rewards;

TEST(Approach, Examples) {
  EXPECT_NEAR(r_approach({0.06, 0}, {0, 0}, {5, 0}), 0.006, 1e-15);
  EXPECT_NEAR(r_approach({0, 0.06}, {0, 0}, {5, 0}), 0.0, 1e-15);
  EXPECT_EQ(r_approach({1, 2}, {1, 2}, {5, 0}), 0.0);
}

TEST(Approach, ZeroWhenPreviousPositionIsTheGoal) {
  EXPECT_EQ(r_approach({0.05, 0}, {3, 3}, {3, 3}), 0.0);
  EXPECT_EQ(r_approach({0.05, 0}, {3, 3}, {3 + 1e-10, 3}), 0.0);
}

TEST(Approach, AntisymmetricUnderStepReversal) {
  testing_support::Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const Vec2 prev = testing_support::random_point(rng, -5, 5);
    const Vec2 goal = testing_support::random_point(rng, -5, 5);
    const Vec2 step = testing_support::random_point(rng, -0.06, 0.06);
    // Hold d_rg fixed by reversing the step around the same anchor.
    const double forward = r_approach(prev + step, prev, goal);
    const double back = r_approach(prev - step, prev, goal);
    EXPECT_NEAR(forward, -back, 1e-15);
  }
}

TEST(Goal, InclusiveRadius) {
  EXPECT_EQ(r_goal({1, 1}, {1, 1}, 0.1), 1.0);
  EXPECT_EQ(r_goal({0.5, 0}, {0, 0}, 0.5), 1.0);
  EXPECT_EQ(r_goal({0.2, 0}, {0, 0}, 0.1), 0.0);
}

TEST(Collision, Triples) {
  EXPECT_EQ(r_col(0.1, 0.1), -1.0);
  EXPECT_EQ(r_col(0.3, 0.1), -0.01 * 0.3);
  EXPECT_EQ(r_col(1.0, 0.1), 0.0);
  EXPECT_EQ(r_col(std::numeric_limits<double>::infinity(), 0.1), 0.0);
}

TEST(Collision, BranchBoundaries) {
  EXPECT_EQ(r_col(0.2, 0.1), -0.002);
  EXPECT_EQ(r_col(0.4, 0.1), 0.0);
  EXPECT_EQ(r_col(0.0, 0.1), -1.0);
}

TEST(Total, Examples) {
  EXPECT_EQ(total({{0, 0}, {0, 0}, {5, 0}, 0.1, 1.0, 0.1}), 0.0);
  EXPECT_EQ(total({{2, 2}, {2, 2}, {2, 2}, 0.1, std::numeric_limits<double>::infinity(), 0.1}), 1.0);
  EXPECT_NEAR(total({{0.06, 0}, {0, 0}, {5, 0}, 0.1, 0.3, 0.1}), 0.003, 1e-15);
}
