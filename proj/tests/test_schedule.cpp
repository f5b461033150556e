#include "optneq/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace optneq;

namespace {

ScheduleParams params(double a, double b, double gamma_hat = 1.0, double lambda = 1.0, double offset = 10.0,
                      ScheduleMode mode = ScheduleMode::PushPull) {
  return {gamma_hat, lambda, offset, a, b, mode};
}

}  // namespace

TEST(ScheduleAt, UnitOffsetGivesUnitLambdaAtZero) {
  EXPECT_DOUBLE_EQ(schedule_at(params(0.5, 0.3, 1, 1, 1), 0).lambda, 1.0);
}

TEST(ScheduleAt, LambdaChangeAtZero) {
  EXPECT_NEAR(schedule_at(params(0.6, 0.5, 1, 1, 1), 0).lambda_change, 1.0 - std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(1.0 - std::sqrt(0.5), 0.292893, 1e-6);
}

TEST(ScheduleAt, GammaAtThree) {
  EXPECT_DOUBLE_EQ(schedule_at(params(0.5, 0.3, 1, 1, 1), 3).gamma, 0.5);
}

TEST(ScheduleAt, MatchesDirectFormula) {
  const auto p = params(0.675, 0.2, 0.7, 2.5, 10.0);
  for (long k : {0L, 1L, 17L, 1000L, 99999L}) {
    const auto v = schedule_at(p, k);
    EXPECT_NEAR(v.gamma, 0.7 / std::pow(k + 10.0, 0.675), 1e-15);
    EXPECT_NEAR(v.lambda, 2.5 / std::pow(k + 10.0, 0.2), 1e-14);
    const double direct = std::abs(1.0 - std::pow(k + 11.0, -0.2) / std::pow(k + 10.0, -0.2));
    EXPECT_NEAR(v.lambda_change, direct, 1e-14);
  }
}

TEST(ValidateSchedule, PushPullPairs) {
  EXPECT_TRUE(validate_schedule(params(0.5, 0.3)).pass());
  EXPECT_TRUE(validate_schedule(params(0.6, 0.25)).pass());
  EXPECT_TRUE(validate_schedule(params(0.675, 0.2)).pass());
  EXPECT_FALSE(validate_schedule(params(0.5, 0.4)).pass());  // 2a + 3b = 2.2
}

TEST(ValidateSchedule, DsgtPairs) {
  const auto d = ScheduleMode::Dsgt;
  EXPECT_TRUE(validate_schedule(params(0.5, 0.4, 1, 1, 10, d)).pass());  // 3a + b = 1.9
  EXPECT_TRUE(validate_schedule(params(0.55, 0.3, 1, 1, 10, d)).pass());
  EXPECT_TRUE(validate_schedule(params(0.6, 0.175, 1, 1, 10, d)).pass());
  EXPECT_FALSE(validate_schedule(params(0.6, 0.3, 1, 1, 10, d)).pass());  // 3a + b = 2.1
}

TEST(ValidateSchedule, RequiresStrictOrderingAndOffset) {
  EXPECT_FALSE(validate_schedule(params(0.3, 0.3)).pass());
  EXPECT_FALSE(validate_schedule(params(0.3, 0.3, 1, 1, 10, ScheduleMode::Dsgt)).pass());
  EXPECT_FALSE(validate_schedule(params(0.5, 0.3, 1, 1, 0.5)).pass());
  EXPECT_FALSE(validate_schedule(params(0.5, 0.0)).pass());
}

TEST(ValidateSchedule, ReportsEveryConditionAndUnenforceableNote) {
  const auto rep = validate_schedule(params(0.5, 0.4));
  int failed = 0;
  for (const auto& c : rep.checks) failed += !c.pass;
  EXPECT_EQ(failed, 1);
  EXPECT_GE(rep.checks.size(), 4u);
  EXPECT_FALSE(rep.notes.empty());
}

// Exhaustive loop over every preset pair and both offsets in use.
TEST(ScheduleLemmas, HoldForAllPresetPairs) {
  struct Pair {
    double a, b;
  };
  const Pair pairs[] = {{0.5, 0.3}, {0.6, 0.25}, {0.675, 0.2}, {0.5, 0.4}, {0.55, 0.3}, {0.6, 0.175}};
  for (const auto& pr : pairs) {
    for (double offset : {10.0, 100.0}) {
      const auto p = params(pr.a, pr.b, 1.0, 1.0, offset);
      auto prev = schedule_at(p, 0);
      EXPECT_GT(prev.gamma, 0.0);
      EXPECT_GT(prev.lambda, 0.0);
      EXPECT_GT(prev.lambda_change, 0.0);
      long bad = 0;
      for (long k = 1; k <= 100000; ++k) {
        const auto cur = schedule_at(p, k);
        bad += !(cur.gamma < prev.gamma);
        bad += !(cur.lambda < prev.lambda);
        bad += !(cur.gamma / cur.lambda < prev.gamma / prev.lambda);
        bad += !(prev.lambda_change <= 1.0 / (k + offset));
        bad += !(cur.lambda_change <= prev.lambda_change);
        bad += !(cur.lambda_change > 0.0);
        prev = cur;
      }
      EXPECT_EQ(bad, 0) << "a=" << pr.a << " b=" << pr.b << " Gamma=" << offset;
    }
  }
}
