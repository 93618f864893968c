#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "brushrecon/image.hpp"
#include "brushrecon/optim.hpp"

namespace brushrecon {
namespace {

TEST(Optim, RmsPropFirstStep) {
  RmsProp opt;
  opt.lr = 0.1;
  std::vector<double> p{1.0, -2.0};
  const std::vector<double> g{0.5, -4.0};
  opt.step(p, g);
  // v = 0.01 g^2, step = lr g / (0.1 |g| + eps) = lr * sign(g) / 0.1
  EXPECT_NEAR(p[0], 1.0 - 0.1 * 0.5 / (0.1 * 0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p[1], -2.0 + 0.1 * 4.0 / (0.1 * 4.0 + 1e-8), 1e-12);
  EXPECT_EQ(opt.step_count, 1);
}

TEST(Optim, RmsPropMinimizesQuadraticBowl) {
  RmsProp opt;
  opt.lr = 0.003;
  std::vector<double> p{0.8, -0.6, 0.3};
  const std::vector<double> scale{1.0, 10.0, 0.1};
  std::vector<double> g(3);
  for (int it = 0; it < 500; ++it) {
    for (int i = 0; i < 3; ++i) g[i] = 2.0 * scale[i] * p[i];
    opt.step(p, g);
  }
  for (double v : p) EXPECT_LT(std::abs(v), 0.05);
}

TEST(Optim, AdamFirstStepIsLearningRate) {
  Adam opt;
  opt.lr = 0.01;
  std::vector<double> p{0.0, 1.0};
  const std::vector<double> g{3.0, -0.2};
  opt.step(p, g);
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 1.01, 1e-9);
}

TEST(Optim, AdamMinimizesQuadratic) {
  Adam opt;
  opt.lr = 0.05;
  std::vector<double> p{2.0, -1.5};
  std::vector<double> g(2);
  for (int it = 0; it < 2000; ++it) {
    g[0] = 2.0 * (p[0] - 0.5);
    g[1] = 2.0 * (p[1] + 0.25);
    opt.step(p, g);
  }
  EXPECT_NEAR(p[0], 0.5, 1e-2);
  EXPECT_NEAR(p[1], -0.25, 1e-2);
}

TEST(Optim, OptimizersRejectSizeMismatch) {
  RmsProp r;
  std::vector<double> p(3, 0.0), g(2, 0.0);
  EXPECT_THROW(r.step(p, g), Error);
  Adam a;
  EXPECT_THROW(a.step(p, g), Error);
}

TEST(Optim, ScheduleKeyValues) {
  Schedule s;
  s.total_steps = 1000;
  s.peak_lr = 0.01;
  EXPECT_NEAR(lr_schedule(s, 0), 0.0, 1e-15);
  EXPECT_NEAR(lr_schedule(s, 50), 0.01, 1e-15);
  EXPECT_NEAR(lr_schedule(s, 25), 0.005, 1e-15);
  EXPECT_NEAR(lr_schedule(s, 500), 0.01, 1e-15);
  EXPECT_NEAR(lr_schedule(s, 875), 0.005, 1e-12);
  EXPECT_NEAR(lr_schedule(s, 1000), 0.0, 1e-15);
}

TEST(Optim, ScheduleIsContinuousAndBounded) {
  Schedule s;
  s.total_steps = 10000;
  s.peak_lr = 0.02;
  double prev = lr_schedule(s, 0);
  for (long t = 1; t <= s.total_steps; ++t) {
    const double v = lr_schedule(s, t);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, s.peak_lr);
    EXPECT_LE(std::abs(v - prev), 0.02 * 2.0 / (0.05 * 10000) + 1e-15);
    prev = v;
  }
}

TEST(Optim, ScheduleValidation) {
  Schedule s;
  s.decay_frac = 0.5;
  EXPECT_THROW(lr_schedule(s, 0), Error);
  s = {};
  EXPECT_THROW(lr_schedule(s, s.total_steps + 1), Error);
}

}  // namespace
}  // namespace brushrecon
