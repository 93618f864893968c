#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "brushrecon/texture.hpp"

namespace brushrecon {
namespace {

PaintStroke sample_stroke() {
  PaintStroke s;
  s.geometry = {{6, 8}, {20, 28}, {34, 10}, 5, 7};
  s.c_start = {0.3, 0.4, 0.5};
  s.c_end = {0.6, 0.2, 0.1};
  s.alpha = 0.8;
  return s;
}

Canvas noise_canvas(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Canvas c(w, h);
  for (double& v : c.data()) v = u(rng);
  return c;
}

TEST(Texture, ModeNamesRoundTrip) {
  for (TextureMode m : {TextureMode::kNone, TextureMode::kProcedural, TextureMode::kExternal})
    EXPECT_EQ(parse_texture_mode(to_string(m)), m);
  EXPECT_THROW(parse_texture_mode("stylegan"), Error);
}

TEST(Texture, GainAndScaleRanges) {
  TextureVector w{};
  EXPECT_NEAR(texture_gain(w), 0.25, 1e-15);
  EXPECT_NEAR(texture_scale(w), 18.0, 1e-12);
  w[0] = -50;
  w[1] = 50;
  EXPECT_LT(texture_gain(w), 1e-20);
  EXPECT_NEAR(texture_scale(w), 32.0, 1e-12);
}

TEST(Texture, ValueNoiseIsBoundedAndDifferentiable) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng), y = u(rng);
    double dx, dy;
    const double v = value_noise(x, y, &dx, &dy);
    EXPECT_LE(std::abs(v), 1.0);
    const double h = 1e-6;
    EXPECT_NEAR(dx, (value_noise(x + h, y) - value_noise(x - h, y)) / (2 * h), 1e-5);
    EXPECT_NEAR(dy, (value_noise(x, y + h) - value_noise(x, y - h)) / (2 * h), 1e-5);
  }
  EXPECT_EQ(value_noise(3.0, 4.0), value_noise(3.0, 4.0));
}

TEST(Texture, ZeroGainLimitIsUntexturedRender) {
  PaintStroke s = sample_stroke();
  s.w[0] = -60.0;
  const RenderConfig cfg{12, 1.0, 2.0};
  const Canvas base = noise_canvas(40, 36, 2);
  const Canvas mod = procedural_texture(s, 40, 36, cfg);
  for (double v : mod.data()) EXPECT_NEAR(v, 1.0, 1e-20);
  EXPECT_LE(max_abs_diff(apply_texture(s, mod, base, cfg), render_paint_soft(s, base, cfg).canvas),
            1e-15);
}

TEST(Texture, ProceduralTextureIsDeterministicAndWindowConsistent) {
  const PaintStroke s = sample_stroke();
  const RenderConfig cfg{12, 1.0, 2.0};
  const Canvas full = procedural_texture(s, 40, 36, cfg);
  EXPECT_EQ(full, procedural_texture(s, 40, 36, cfg));
  // the same stroke expressed in a window at (10, 5)
  PaintStroke local = s;
  local.geometry = translated(s.geometry, {-10, -5});
  const Canvas win = procedural_texture(local, 30, 31, cfg, {10, 5});
  for (int y = 0; y < 31; ++y)
    for (int x = 0; x < 30; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(win.at(x, y, c), full.at(x + 10, y + 5, c), 1e-12);
}

TEST(Texture, ModulationIsOneOutsideSupportBox) {
  const PaintStroke s = sample_stroke();
  const RenderConfig cfg{12, 1.0, 2.0};
  const Canvas m = procedural_texture(s, 40, 36, cfg);
  const CoverageMask mask = stroke_mask(s.geometry, cfg, 40, 36);
  for (int y = 0; y < 36; ++y)
    for (int x = 0; x < 40; ++x)
      if (!mask.box.contains(x, y)) EXPECT_EQ(m.pixel(x, y), (Rgb{1, 1, 1}));
}

TEST(Texture, BackwardMatchesFiniteDifference) {
  PaintStroke s = sample_stroke();
  s.w[0] = 0.4;
  s.w[1] = -0.3;
  const RenderConfig cfg{12, 1.0, 2.0};
  const Canvas up = noise_canvas(40, 36, 3);
  auto objective = [&](const PaintStroke& p) {
    const Canvas m = procedural_texture(p, 40, 36, cfg, {2, 1});
    double v = 0.0;
    for (std::size_t i = 0; i < m.data().size(); ++i) v += up.data()[i] * m.data()[i];
    return v;
  };
  const auto g = procedural_texture_backward(s, up, cfg, {2, 1});
  for (int k = 0; k < 2; ++k) {
    PaintStroke p = s, m = s;
    p.w[k] += 1e-5;
    m.w[k] -= 1e-5;
    const double num = (objective(p) - objective(m)) / 2e-5;
    EXPECT_NEAR(g[k], num, 1e-6 * std::max(1.0, std::abs(num)));
  }
}

TEST(Texture, ExternalTextureMapsAndCrops) {
  const auto dir = std::filesystem::temp_directory_path() / "brushrecon_texture_test";
  std::filesystem::create_directories(dir);
  Canvas tex(8, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) tex.set_pixel(x, y, {x / 255.0, y / 255.0, 0.5});
  save_image(tex, dir / "3.ppm");
  const Canvas m = external_texture(dir, 3, 4, 3, {2, 1}, 8, 6);
  EXPECT_NEAR(m.at(0, 0, 0), 0.5 + 2 / 255.0, 1e-12);
  EXPECT_NEAR(m.at(3, 2, 1), 0.5 + 3 / 255.0, 1e-12);
  EXPECT_NEAR(m.at(1, 1, 2), 0.5 + 128 / 255.0, 1e-12);
  EXPECT_THROW(external_texture(dir, 4, 4, 3, {0, 0}, 8, 6), Error);
}

}  // namespace
}  // namespace brushrecon
