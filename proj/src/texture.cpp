#include "brushrecon/texture.hpp"

#include <cmath>
#include <cstdint>

namespace brushrecon {

std::string to_string(TextureMode mode) {
  switch (mode) {
    case TextureMode::kNone: return "none";
    case TextureMode::kProcedural: return "procedural";
    case TextureMode::kExternal: return "external";
  }
  return "none";
}

TextureMode parse_texture_mode(const std::string& s) {
  if (s == "none") return TextureMode::kNone;
  if (s == "procedural") return TextureMode::kProcedural;
  if (s == "external") return TextureMode::kExternal;
  throw Error("unknown texture mode '" + s + "' (expected none|procedural|external)");
}

namespace {

double lattice(std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ull ^
                    (static_cast<std::uint64_t>(iy) + 0x632BE59BD9B4E019ull) * 0xC2B2AE3D27D4EB4Full;
  h ^= h >> 33;
  h *= 0xFF51AFD7ED558CCDull;
  h ^= h >> 33;
  h *= 0xC4CEB9FE1A85EC53ull;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
double fade_derivative(double t) { return 30.0 * t * t * (t * (t - 2.0) + 1.0); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Rect texture_support(const PaintStroke& stroke, const RenderConfig& cfg, int w, int h) {
  return stamp_bounds(sample_stamps(stroke.geometry, cfg.stamps), kMaskCutoff * cfg.tau, w, h);
}

}  // namespace

double value_noise(double x, double y, double* dx, double* dy) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = x - fx, ty = y - fy;
  const double v00 = lattice(ix, iy), v10 = lattice(ix + 1, iy);
  const double v01 = lattice(ix, iy + 1), v11 = lattice(ix + 1, iy + 1);
  const double sx = fade(tx), sy = fade(ty);
  const double a = v00 + sx * (v10 - v00);
  const double b = v01 + sx * (v11 - v01);
  if (dx) {
    const double dsx = fade_derivative(tx);
    *dx = dsx * ((v10 - v00) + sy * ((v11 - v01) - (v10 - v00)));
  }
  if (dy) *dy = fade_derivative(ty) * (b - a);
  return a + sy * (b - a);
}

double texture_gain(const TextureVector& w) { return 0.5 * sigmoid(w[0]); }
double texture_scale(const TextureVector& w) { return 4.0 + 28.0 * sigmoid(w[1]); }

Canvas procedural_texture(const PaintStroke& stroke, int width, int height,
                          const RenderConfig& cfg, Vec2 origin) {
  Canvas mod(width, height, {1.0, 1.0, 1.0});
  const double g = texture_gain(stroke.w);
  const double s = texture_scale(stroke.w);
  const Rect box = texture_support(stroke, cfg, width, height);
#pragma omp parallel for schedule(static)
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const double n = value_noise((x + origin.x) / s, (y + origin.y) / s);
      const double m = std::clamp(1.0 + g * n, 0.5, 1.5);
      mod.set_pixel(x, y, {m, m, m});
    }
  }
  return mod;
}

std::array<double, 2> procedural_texture_backward(const PaintStroke& stroke,
                                                  const Canvas& d_modulation,
                                                  const RenderConfig& cfg, Vec2 origin) {
  const double s0 = sigmoid(stroke.w[0]), s1 = sigmoid(stroke.w[1]);
  const double g = 0.5 * s0;
  const double s = 4.0 + 28.0 * s1;
  const double dg_dw0 = 0.5 * s0 * (1.0 - s0);
  const double ds_dw1 = 28.0 * s1 * (1.0 - s1);
  const Rect box = texture_support(stroke, cfg, d_modulation.width(), d_modulation.height());
  double d_g = 0.0, d_s = 0.0;
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const Rgb dm = d_modulation.pixel(x, y);
      const double sum = dm.r + dm.g + dm.b;
      if (sum == 0.0) continue;
      const double gx = x + origin.x, gy = y + origin.y;
      double nx, ny;
      const double n = value_noise(gx / s, gy / s, &nx, &ny);
      const double m = 1.0 + g * n;
      if (m <= 0.5 || m >= 1.5) continue;
      d_g += sum * n;
      d_s += sum * g * -(nx * gx + ny * gy) / (s * s);
    }
  }
  return {d_g * dg_dw0, d_s * ds_dw1};
}

Canvas external_texture(const std::filesystem::path& dir, std::size_t index, int width,
                        int height, Vec2 origin, int canvas_width, int canvas_height) {
  const std::filesystem::path path = dir / (std::to_string(index) + ".ppm");
  const Canvas img = load_image(path);
  if (img.width() != canvas_width || img.height() != canvas_height) {
    throw ImageIoError(path, "texture size " + std::to_string(img.width()) + "x" +
                                 std::to_string(img.height()) + " does not match canvas " +
                                 std::to_string(canvas_width) + "x" +
                                 std::to_string(canvas_height));
  }
  Canvas mod(width, height, {1.0, 1.0, 1.0});
  const int ox = static_cast<int>(origin.x), oy = static_cast<int>(origin.y);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Rgb v = img.pixel(x + ox, y + oy);
      mod.set_pixel(x, y, {0.5 + v.r, 0.5 + v.g, 0.5 + v.b});
    }
  }
  return mod;
}

Canvas apply_texture(const PaintStroke& stroke, const Canvas& modulation, const Canvas& canvas,
                     const RenderConfig& cfg) {
  require_same_size(modulation, canvas, "apply_texture");
  return render_paint_soft(stroke, canvas, cfg, &modulation).canvas;
}

}  // namespace brushrecon
