#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "brushrecon/geometry.hpp"

namespace brushrecon {
namespace {

TEST(Geometry, BezierEndpointsAndMidpoint) {
  const StrokeGeometry g{{0, 0}, {2, 4}, {4, 0}, 1, 3};
  EXPECT_EQ(bezier_point(g, 0.0), (Vec2{0, 0}));
  EXPECT_EQ(bezier_point(g, 1.0), (Vec2{4, 0}));
  const Vec2 m = bezier_point(g, 0.5);
  EXPECT_DOUBLE_EQ(m.x, 2.0);
  EXPECT_DOUBLE_EQ(m.y, 2.0);
}

TEST(Geometry, StampsSampleUniformParameterAndInterpolateRadius) {
  const StrokeGeometry g{{0, 0}, {5, 5}, {10, 0}, 2, 6};
  const StampSequence s = sample_stamps(g, 4);
  ASSERT_EQ(s.size(), 5);
  EXPECT_EQ(s.segments(), 4);
  EXPECT_TRUE(s.color.empty());
  for (int k = 0; k <= 4; ++k) {
    EXPECT_DOUBLE_EQ(s.t[k], k / 4.0);
    EXPECT_NEAR(s.radius[k], 2.0 + k, 1e-12);
    const Vec2 p = bezier_point(g, k / 4.0);
    EXPECT_DOUBLE_EQ(s.position[k].x, p.x);
    EXPECT_DOUBLE_EQ(s.position[k].y, p.y);
  }
}

TEST(Geometry, PaintStampsInterpolateColour) {
  PaintStroke p;
  p.geometry = {{0, 0}, {1, 0}, {2, 0}, 1, 1};
  p.c_start = {1, 0, 0};
  p.c_end = {0, 0, 1};
  const StampSequence s = sample_stamps(p, 2);
  ASSERT_EQ(s.color.size(), 3u);
  EXPECT_NEAR(s.color[1].r, 0.5, 1e-12);
  EXPECT_NEAR(s.color[1].b, 0.5, 1e-12);
}

TEST(Geometry, ArcLengthsOfStraightLine) {
  const std::vector<Vec2> pts{{0, 0}, {3, 4}, {6, 8}, {6, 8}};
  const ArcLengths a = arc_lengths(pts);
  ASSERT_EQ(a.cumulative.size(), 4u);
  EXPECT_DOUBLE_EQ(a.cumulative[0], 0.0);
  EXPECT_DOUBLE_EQ(a.cumulative[1], 5.0);
  EXPECT_DOUBLE_EQ(a.total, 10.0);
  const auto t = normalized_arc_positions(a);
  EXPECT_DOUBLE_EQ(t[1], 0.5);
  EXPECT_DOUBLE_EQ(t[3], 1.0);
}

TEST(Geometry, DegenerateArcFallsBackToIndex) {
  const std::vector<Vec2> pts(5, Vec2{2, 2});
  const auto t = normalized_arc_positions(arc_lengths(pts));
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(t[i], i / 4.0);
}

TEST(Geometry, ArcPositionsAreMonotone) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 100; ++trial) {
    const StrokeGeometry g{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, 2, 3};
    const StampSequence s = sample_stamps(g, 30);
    const auto t = normalized_arc_positions(arc_lengths(s.position));
    EXPECT_DOUBLE_EQ(t.front(), 0.0);
    EXPECT_DOUBLE_EQ(t.back(), 1.0);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GE(t[i], t[i - 1]);
    EXPECT_NEAR(s.length, s.arc.back(), 1e-12);
  }
}

TEST(Geometry, ArcLengthBackwardMatchesFiniteDifference) {
  std::vector<Vec2> pts{{0, 0}, {1.5, 2.0}, {4.0, 2.5}, {5.0, 0.5}};
  const std::vector<double> dc{0.3, -0.7, 1.1, 0.4};
  const double dt = 0.9;
  auto objective = [&](const std::vector<Vec2>& p) {
    const ArcLengths a = arc_lengths(p);
    double v = dt * a.total;
    for (std::size_t i = 0; i < p.size(); ++i) v += dc[i] * a.cumulative[i];
    return v;
  };
  std::vector<Vec2> grad(pts.size());
  backprop_arc_lengths(pts, dc, dt, grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int c = 0; c < 2; ++c) {
      auto plus = pts, minus = pts;
      (c ? plus[i].y : plus[i].x) += h;
      (c ? minus[i].y : minus[i].x) -= h;
      const double num = (objective(plus) - objective(minus)) / (2 * h);
      EXPECT_NEAR(c ? grad[i].y : grad[i].x, num, 1e-6);
    }
  }
}

TEST(Geometry, TranslationMovesAllControlPoints) {
  const StrokeGeometry g{{1, 2}, {3, 4}, {5, 6}, 1, 2};
  const StrokeGeometry t = translated(g, {10, -1});
  EXPECT_EQ(t.start, (Vec2{11, 1}));
  EXPECT_EQ(t.control, (Vec2{13, 3}));
  EXPECT_EQ(t.end, (Vec2{15, 5}));
  EXPECT_EQ(t.r_end, 2.0);
}

TEST(Geometry, Validity) {
  PaintStroke p;
  p.geometry = {{0, 0}, {1, 1}, {2, 2}, 1, 1};
  EXPECT_TRUE(is_valid(p));
  p.geometry.r_start = 0.0;
  EXPECT_FALSE(is_valid(p));
  p.geometry.r_start = 1.0;
  p.geometry.control.x = std::nan("");
  EXPECT_FALSE(is_valid(p));
  p.geometry.control.x = 1.0;
  p.alpha = 1.5;
  EXPECT_FALSE(is_valid(p));
}

}  // namespace
}  // namespace brushrecon
