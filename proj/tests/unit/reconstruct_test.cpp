#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "brushrecon/reconstruct.hpp"

namespace brushrecon {
namespace {

Canvas quad_target(int size) {
  Canvas c(size, size);
  const Rgb cols[4] = {{0.9, 0.1, 0.1}, {0.1, 0.8, 0.2}, {0.1, 0.2, 0.9}, {0.9, 0.8, 0.1}};
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) c.set_pixel(x, y, cols[(y >= size / 2) * 2 + (x >= size / 2)]);
  return c;
}

Canvas ramp_target(int w, int h) {
  Canvas c(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = static_cast<double>(x) / (w - 1);
      c.set_pixel(x, y, {v, 0.5 * v, 1.0 - v});
    }
  return c;
}

PhaseConfig tiny_config() {
  PhaseConfig cfg;
  cfg.levels = 2;
  cfg.total_strokes = 8;
  cfg.smudge_strokes = 4;
  cfg.paint_iterations = 4;
  cfg.texture_iterations = 3;
  cfg.smudge_iterations = 3;
  cfg.render.stamps = 8;
  cfg.smudge.stamps = 6;
  cfg.smudge.patch_res = 8;
  cfg.ot.grid = 8;
  cfg.ot.iterations = 20;
  cfg.seed = 42;
  return cfg;
}

TEST(Reconstruct, StrokeBudgets) {
  PhaseConfig cfg;
  cfg.levels = 3;
  cfg.total_strokes = 90;
  EXPECT_EQ(paint_strokes_per_cell(cfg, 1), 30);
  EXPECT_EQ(paint_strokes_per_cell(cfg, 2), 7);
  EXPECT_EQ(paint_strokes_per_cell(cfg, 3), 3);
  EXPECT_EQ(smudge_strokes_per_cell(cfg, 1), 11);
  EXPECT_EQ(smudge_strokes_per_cell(cfg, 3), 0);
  cfg.total_strokes = 2;
  EXPECT_EQ(paint_strokes_per_cell(cfg, 3), 1);
  cfg.smudge_strokes = 0;
  EXPECT_EQ(smudge_strokes_per_cell(cfg, 1), 0);
}

TEST(Reconstruct, CellRngStreamsAreIndependentAndReproducible) {
  auto a = cell_rng(1, 1, 0, 0), b = cell_rng(1, 1, 0, 0), c = cell_rng(1, 1, 0, 1),
       d = cell_rng(1, 2, 0, 0), e = cell_rng(2, 1, 0, 0);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
  EXPECT_NE(va, e());
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(a);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Reconstruct, SingleErrorPixelPinsEveryStart) {
  ScalarField err(16, 12, 0.0);
  err.at(5, 7) = 0.3;
  auto rng = cell_rng(3, 1, 0, 0);
  for (const Vec2 p : sample_error_points(err, Rect{0, 0, 16, 12}, 200, rng))
    EXPECT_EQ(p, (Vec2{5, 7}));
}

TEST(Reconstruct, ErrorSamplingFollowsErrorMass) {
  ScalarField err(4, 1, 0.0);
  const double w[4] = {1.0, 2.0, 3.0, 4.0};
  for (int i = 0; i < 4; ++i) err.at(i, 0) = w[i];
  auto rng = cell_rng(9, 1, 0, 0);
  const int n = 10000;
  int counts[4] = {};
  for (const Vec2 p : sample_error_points(err, Rect{0, 0, 4, 1}, n, rng))
    ++counts[static_cast<int>(p.x)];
  double chi2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double expected = n * w[i] / 10.0;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  EXPECT_LT(chi2, 16.27);  // 3 dof, p = 0.001
}

TEST(Reconstruct, ZeroErrorSamplesUniformlyInsideCell) {
  const ScalarField err(20, 20, 0.0);
  const Rect cell{10, 0, 20, 10};
  auto rng = cell_rng(4, 2, 1, 0);
  std::map<std::pair<int, int>, int> seen;
  for (const Vec2 p : sample_error_points(err, cell, 5000, rng)) {
    EXPECT_TRUE(cell.contains(static_cast<int>(p.x), static_cast<int>(p.y)));
    ++seen[{static_cast<int>(p.x), static_cast<int>(p.y)}];
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Reconstruct, InitialStrokesStartOnErrorAndTakeTargetColour) {
  const Canvas target = quad_target(32);
  const ScalarField err = error_map(Canvas(32, 32, {1, 1, 1}), target);
  const Rect cell{16, 0, 32, 16};
  auto rng = cell_rng(5, 2, 1, 0);
  const auto strokes = init_strokes(err, target, cell, 20, 1.0, 256.0, 0.8, rng);
  ASSERT_EQ(strokes.size(), 20u);
  for (const auto& s : strokes) {
    EXPECT_TRUE(is_valid(s));
    EXPECT_DOUBLE_EQ(s.geometry.r_start, initial_radius(cell, 1.0, 256.0));
    EXPECT_EQ(s.c_start, target.pixel(static_cast<int>(s.geometry.start.x),
                                      static_cast<int>(s.geometry.start.y)));
    EXPECT_EQ(s.alpha, 0.8);
    for (Vec2 p : {s.geometry.start, s.geometry.control, s.geometry.end}) {
      EXPECT_GE(p.x, cell.x0);
      EXPECT_LE(p.x, cell.x1 - 1);
      EXPECT_GE(p.y, cell.y0);
      EXPECT_LE(p.y, cell.y1 - 1);
    }
  }
}

TEST(Reconstruct, SmudgeStrokesFollowIsophotes) {
  // luminance varies along x only, so isophotes are vertical
  const Canvas target = ramp_target(40, 40);
  const ScalarField err(40, 40, 1.0);
  auto rng = cell_rng(6, 1, 0, 2);
  const Rect cell{5, 5, 35, 35};
  for (const auto& s : init_smudge_strokes(err, target, cell, 30, 1.0, 256.0, rng)) {
    const Vec2 d = s.geometry.end - s.geometry.start;
    if (norm(d) < 1e-9) continue;
    EXPECT_LT(std::abs(d.x), 1e-9 + 1e-9 * norm(d));
  }
}

TEST(Reconstruct, PaintObjectivePackRoundTripAndGradient) {
  const Canvas target = quad_target(24);
  const AppearanceLoss loss(target, nullptr, LossWeights{}, OTConfig{8, 10.0, 20});
  auto rng = cell_rng(7, 1, 0, 0);
  const ScalarField err = error_map(Canvas(24, 24, {1, 1, 1}), target);
  const auto init = init_strokes(err, target, Rect{0, 0, 24, 24}, 3, 1.0, 256.0, 0.8, rng);
  const PaintObjective obj(loss, Canvas(24, 24, {1, 1, 1}), RenderConfig{8, 1.0, 2.0}, init);
  const auto x = obj.pack(init);
  ASSERT_EQ(x.size(), obj.dimension());
  EXPECT_EQ(obj.unpack(x), init);
  std::vector<double> g(x.size());
  const double v = obj.evaluate(x, g).total;
  EXPECT_EQ(v, obj.evaluate(x).total);
  for (std::size_t i : {std::size_t{0}, std::size_t{7}, std::size_t{9}, std::size_t{14 + 15}}) {
    auto p = x, m = x;
    p[i] += 1e-5;
    m[i] -= 1e-5;
    const double num = (obj.evaluate(p).total - obj.evaluate(m).total) / 2e-5;
    EXPECT_LT(relative_error(g[i], num), 1e-3) << "slot " << i << " " << g[i] << " " << num;
  }
}

TEST(Reconstruct, PaintPhaseReturnsBestSnapshot) {
  const Canvas target = quad_target(24);
  PhaseConfig cfg = tiny_config();
  cfg.paint_iterations = 12;
  cfg.paint_lr = 0.01;
  WindowProblem problem{&target, nullptr, Canvas(24, 24, {1, 1, 1}), {0, 0}};
  auto rng = cell_rng(8, 1, 0, 0);
  const ScalarField err = error_map(problem.canvas, target);
  const auto init = init_strokes(err, target, target.bounds(), 4, 1.0, 256.0, 0.8, rng);
  PhaseTrace trace;
  const auto best = optimize_paint_phase(problem, init, cfg, nullptr, &trace);
  ASSERT_FALSE(trace.losses.empty());
  EXPECT_EQ(trace.best, *std::min_element(trace.losses.begin(), trace.losses.end()));
  EXPECT_LE(trace.best, trace.losses.front());
  const AppearanceLoss loss(target, nullptr, cfg.weights, cfg.ot);
  const PaintObjective obj(loss, problem.canvas, cfg.render, init);
  EXPECT_NEAR(obj.evaluate(obj.pack(best)).total, trace.best, 1e-9 * std::abs(trace.best));
  for (const auto& s : best) EXPECT_TRUE(is_valid(s));
}

TEST(Reconstruct, TexturePhaseFreezesAppearanceSlots) {
  const Canvas target = ramp_target(24, 24);
  PhaseConfig cfg = tiny_config();
  cfg.texture_iterations = 6;
  WindowProblem problem{&target, nullptr, Canvas(24, 24, {1, 1, 1}), {3, 5}};
  auto rng = cell_rng(10, 1, 0, 0);
  const auto strokes = init_strokes(error_map(problem.canvas, target), target, target.bounds(), 4,
                                    1.0, 256.0, 0.8, rng);
  const auto out = optimize_texture_phase(problem, strokes, cfg);
  ASSERT_EQ(out.size(), strokes.size());
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    std::array<double, kPaintSlots> a, b;
    write_paint(strokes[i], a);
    write_paint(out[i], b);
    for (int k = 0; k < kPaintSlots; ++k)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a[k]), std::bit_cast<std::uint64_t>(b[k]));
    for (int k = 2; k < kTextureDim; ++k) EXPECT_EQ(out[i].w[k], strokes[i].w[k]);
  }
  cfg.texture = TextureMode::kNone;
  const auto same = optimize_texture_phase(problem, strokes, cfg);
  EXPECT_EQ(same, strokes);
}

TEST(Reconstruct, SmallRunIsDeterministicAndReplays) {
  const Canvas target = quad_target(32);
  const PhaseConfig cfg = tiny_config();
  const ReconstructResult a = reconstruct(target, nullptr, cfg);
  const ReconstructResult b = reconstruct(target, nullptr, cfg);
  EXPECT_EQ(to_json(a.timeline), to_json(b.timeline));
  EXPECT_FALSE(a.timeline.events.empty());
  EXPECT_LE(max_abs_diff(replay(a.timeline), a.canvas), 1e-6);
  ASSERT_EQ(a.report.level_pixel_loss.size(), 2u);
  EXPECT_LE(a.report.level_pixel_loss[0], a.report.initial_pixel_loss);
  EXPECT_LE(a.report.level_pixel_loss[1], a.report.level_pixel_loss[0]);
  EXPECT_NEAR(a.report.level_pixel_loss.back(), pixel_loss(a.canvas, target), 1e-12);

  PhaseConfig other = cfg;
  other.seed = 43;
  EXPECT_NE(to_json(reconstruct(target, nullptr, other).timeline), to_json(a.timeline));
}

TEST(Reconstruct, EventsRespectLevelsAndPhases) {
  const Canvas target = ramp_target(32, 24);
  const ReconstructResult r = reconstruct(target, nullptr, tiny_config());
  int prev_level = 1;
  for (const auto& e : r.timeline.events) {
    EXPECT_GE(e.level, prev_level);
    prev_level = e.level;
    EXPECT_LT(e.cell, e.level * e.level);
    if (e.level == 2) EXPECT_EQ(e.phase, StrokePhase::kPaint);
  }
}

TEST(Reconstruct, LabelsAreAccepted) {
  const Canvas target = quad_target(24);
  std::vector<int> ids(24 * 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) ids[y * 24 + x] = (y >= 12) * 2 + (x >= 12);
  const LabelMap labels(24, 24, ids);
  PhaseConfig cfg = tiny_config();
  cfg.levels = 1;
  const ReconstructResult r = reconstruct(target, &labels, cfg);
  EXPECT_LE(r.report.level_pixel_loss[0], r.report.initial_pixel_loss);
}

TEST(Reconstruct, InvalidConfigRejected) {
  PhaseConfig cfg;
  cfg.levels = 0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.paint_iterations = 0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.radius_min = 5;
  cfg.radius_max = 2;
  EXPECT_THROW(validate(cfg), Error);
}

}  // namespace
}  // namespace brushrecon
