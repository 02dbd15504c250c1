#include <cmath>

#include <gtest/gtest.h>

#include "feather/error.hpp"
#include "feather/prune_schedule.hpp"

namespace feather {
namespace {

PruneSchedule scaled() {
  PruneSchedule s;
  s.start_step = 2000;
  s.interval = 50;
  s.end_step = 20000;
  s.target_sparsity = 0.9;
  return s;
}

TEST(PruneSchedule, DefaultsFollowTheLongSchedule) {
  const PruneSchedule s;
  EXPECT_EQ(s.start_step, 20000);
  EXPECT_EQ(s.interval, 500);
  EXPECT_EQ(s.end_step, 200000);
  EXPECT_EQ(s.target_sparsity, 0.9);
  EXPECT_EQ(s.block.rows, 16u);
  EXPECT_EQ(s.block.cols, 1u);
  EXPECT_EQ(s.curve, PruneCurve::kCubic);
}

TEST(PruneSchedule, ZeroBeforeStart) {
  const PruneSchedule s = scaled();
  EXPECT_EQ(s.sparsity_at(0), 0.0);
  EXPECT_EQ(s.sparsity_at(1999), 0.0);
  EXPECT_EQ(s.sparsity_at(2000), 0.0);  // first event, curve starts at 0
}

TEST(PruneSchedule, TargetAtAndAfterEnd) {
  const PruneSchedule s = scaled();
  EXPECT_EQ(s.sparsity_at(20000), 0.9);
  EXPECT_EQ(s.sparsity_at(1000000), 0.9);
  EXPECT_EQ(PruneSchedule{}.sparsity_at(200000), 0.9);
}

TEST(PruneSchedule, CubicMidpoint) {
  const PruneSchedule s = scaled();  // midpoint 11000 is an event
  EXPECT_NEAR(s.sparsity_at(11000), 0.875 * 0.9, 1e-15);
  PruneSchedule lin = s;
  lin.curve = PruneCurve::kLinear;
  EXPECT_NEAR(lin.sparsity_at(11000), 0.45, 1e-15);
}

TEST(PruneSchedule, QuantizedToEvents) {
  const PruneSchedule s = scaled();
  EXPECT_EQ(s.sparsity_at(2049), s.sparsity_at(2000));
  EXPECT_EQ(s.sparsity_at(11049), s.sparsity_at(11000));
  EXPECT_GT(s.sparsity_at(11050), s.sparsity_at(11049));
  EXPECT_TRUE(s.is_event(2000));
  EXPECT_TRUE(s.is_event(2050));
  EXPECT_FALSE(s.is_event(2051));
  EXPECT_TRUE(s.is_event(20000));
  EXPECT_FALSE(s.is_event(20050));
  EXPECT_FALSE(s.is_event(1950));
}

TEST(PruneSchedule, NonDecreasing) {
  for (PruneCurve curve : {PruneCurve::kCubic, PruneCurve::kLinear}) {
    PruneSchedule s = scaled();
    s.curve = curve;
    double prev = 0.0;
    for (std::int64_t t = 0; t <= 21000; ++t) {
      const double v = s.sparsity_at(t);
      ASSERT_GE(v, prev) << t;
      prev = v;
    }
  }
}

TEST(PruneSchedule, InvalidIsConfigError) {
  PruneSchedule s = scaled();
  s.end_step = s.start_step;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(s.sparsity_at(5), ConfigError);
  s = scaled();
  s.interval = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = scaled();
  s.target_sparsity = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = scaled();
  s.target_sparsity = -0.1;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(parse_prune_curve("exponential"), ConfigError);
}

}  // namespace
}  // namespace feather
