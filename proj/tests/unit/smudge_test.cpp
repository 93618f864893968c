#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "brushrecon/smudge.hpp"

namespace brushrecon {
namespace {

Canvas smooth_canvas(int size) {
  Canvas c(size, size);
  const double k = 2.0 * M_PI / size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      c.set_pixel(x, y, {0.5 + 0.4 * std::sin(3 * k * x), 0.5 + 0.4 * std::cos(2 * k * y),
                         0.5 + 0.4 * std::sin(k * (x + y))});
  return c;
}

TEST(Smudge, KernelRowsSumToOne) {
  for (double a : {0.5, 1.0, 2.0, 5.0})
    for (double b : {0.5, 1.0, 2.0, 5.0})
      for (int n : {1, 2, 17, 256}) {
        std::vector<double> t(n + 1);
        for (int i = 0; i <= n; ++i) t[i] = static_cast<double>(i) / n;
        const KernelMatrix K = beta_kernel(t, a, b);
        for (int k = 0; k <= n; ++k) {
          double sum = 0.0;
          for (int i = 0; i <= n; ++i) {
            if (i > k) EXPECT_EQ(K.at(k, i), 0.0);
            EXPECT_GE(K.at(k, i), 0.0);
            sum += K.at(k, i);
          }
          EXPECT_NEAR(sum, 1.0, 1e-9);
        }
      }
}

TEST(Smudge, UniformKernelIsRunningMean) {
  std::vector<double> t{0.0, 0.1, 0.35, 0.9, 1.0};
  const KernelMatrix K = beta_kernel(t, 1.0, 1.0);
  for (int k = 0; k < 5; ++k)
    for (int i = 0; i <= k; ++i) EXPECT_EQ(K.at(k, i), 1.0 / (k + 1));
}

TEST(Smudge, KernelRejectsNonPositiveShape) {
  std::vector<double> t{0.0, 1.0};
  EXPECT_THROW(beta_kernel(t, 0.0, 1.0), Error);
  EXPECT_THROW(beta_kernel(t, 1.0, -2.0), Error);
}

TEST(Smudge, ReferenceBrushStatesMatchUnrolledRecurrence) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0), pos(5.0, 27.0), rad(1.0, 6.0);
  const Canvas canvas = smooth_canvas(32);
  for (int trial = 0; trial < 100; ++trial) {
    SmudgeParams p;
    p.alpha_c = u(rng);
    p.alpha_s = u(rng);
    p.stamps = 1 + static_cast<int>(u(rng) * 50);
    p.patch_res = 1;
    const SmudgeStroke s{{{pos(rng), pos(rng)}, {pos(rng), pos(rng)}, {pos(rng), pos(rng)},
                          rad(rng), rad(rng)}};
    SmudgeTrace trace;
    smudge_reference(s, canvas, p, &trace);
    ASSERT_EQ(trace.brush.size(), static_cast<std::size_t>(p.stamps + 1));
    std::vector<std::vector<double>> reads;
    for (const auto& r : trace.reads) reads.push_back(r.rgb);
    const auto closed = unrolled_brush(trace.brush[0].rgb, reads, p.alpha_c, p.alpha_s);
    for (std::size_t k = 0; k < closed.size(); ++k)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(trace.brush[k].rgb[c], closed[k][c], 1e-10);
  }
}

TEST(Smudge, ExtractThenWriteReproducesLinearCanvas) {
  Canvas c(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      c.set_pixel(x, y, {0.005 * x, 0.004 * y + 0.1, 0.003 * (x + y) + 0.2});
  const Vec2 center{31.3, 30.6};
  const double r = 10.0;
  const BrushState b = extract_patch(c, center, r, 64);
  Canvas w = c;
  write_patch(w, b, center, r, 1.0);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const double d = std::hypot(x - center.x, y - center.y);
      if (d <= 0.8 * r) {
        for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(w.at(x, y, ch), c.at(x, y, ch), 1e-10);
      }
    }
}

TEST(Smudge, WriteWithZeroWeightIsNoOp) {
  const Canvas c = smooth_canvas(32);
  Canvas w = c;
  BrushState b = BrushState::zeros(8);
  write_patch(w, b, {16, 16}, 5.0, 0.0);
  EXPECT_EQ(w, c);
}

TEST(Smudge, FullRetentionLeavesBrushConstant) {
  // alpha_s = 1 keeps the initial pickup: B_k = B_0 for all k.
  const Canvas c = smooth_canvas(48);
  SmudgeParams p;
  p.alpha_s = 1.0;
  p.stamps = 12;
  p.patch_res = 8;
  SmudgeTrace trace;
  smudge_reference(SmudgeStroke{{{10, 24}, {24, 20}, {38, 24}, 5, 5}}, c, p, &trace);
  for (const auto& b : trace.brush) EXPECT_EQ(b.rgb, trace.brush[0].rgb);
}

TEST(Smudge, OneShotCloseToReference) {
  const Canvas c = smooth_canvas(128);
  for (bool curved : {false, true}) {
    const SmudgeStroke s{{{25, 64}, {64, curved ? 25.0 : 64.0}, {103, 64}, 12, 12}};
    for (int n : {10, 20}) {
      SmudgeParams p;
      p.stamps = n;
      p.patch_res = 32;
      const double l1 = mean_abs_diff(smudge_oneshot(s, c, p), smudge_reference(s, c, p));
      EXPECT_LE(l1, 0.02) << "curved " << curved << " n " << n;
      EXPECT_GT(mean_abs_diff(smudge_oneshot(s, c, p), c), 0.0);
    }
  }
}

TEST(Smudge, OneShotLeavesFarPixelsUntouched) {
  const Canvas c = smooth_canvas(64);
  SmudgeParams p;
  p.patch_res = 16;
  const Canvas out = smudge_oneshot(SmudgeStroke{{{10, 10}, {15, 12}, {20, 10}, 3, 3}}, c, p);
  for (int y = 30; y < 64; ++y)
    for (int x = 0; x < 64; ++x) EXPECT_EQ(out.pixel(x, y), c.pixel(x, y));
}

TEST(Smudge, InvalidParamsRejected) {
  SmudgeParams p;
  p.alpha_c = 1.5;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.patch_res = 0;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.stamps = 0;
  EXPECT_THROW(validate(p), Error);
}

}  // namespace
}  // namespace brushrecon
