#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>

#include "brushrecon/geometry.hpp"
#include "brushrecon/image.hpp"
#include "brushrecon/paint.hpp"

namespace brushrecon {

enum class TextureMode { kNone, kProcedural, kExternal };

std::string to_string(TextureMode mode);
TextureMode parse_texture_mode(const std::string& s);

/// Fills a window-sized modulation field (preset to 1) for a stroke given in
/// window coordinates; `origin` is the window's offset in canvas pixels.
using TextureGeneratorHook =
    std::function<void(const PaintStroke& stroke, Vec2 origin, Canvas& modulation)>;

/// Deterministic value noise in [-1, 1] on a fixed integer lattice, with
/// quintic fade. Optional outputs receive the partial derivatives.
double value_noise(double x, double y, double* dx = nullptr, double* dy = nullptr);

/// gain = sigmoid(w[0]) / 2, scale = 4 + 28 sigmoid(w[1]) pixels.
double texture_gain(const TextureVector& w);
double texture_scale(const TextureVector& w);

/// Procedural modulation 1 + gain * noise(p / scale) over the bounding box of the
/// stroke's soft support, 1 elsewhere. Noise is evaluated at canvas coordinates (window
/// coordinate plus origin) so windows agree with the full canvas.
Canvas procedural_texture(const PaintStroke& stroke, int width, int height,
                          const RenderConfig& cfg, Vec2 origin = {});

/// Adjoint of procedural_texture with respect to w[0] and w[1].
std::array<double, 2> procedural_texture_backward(const PaintStroke& stroke,
                                                  const Canvas& d_modulation,
                                                  const RenderConfig& cfg, Vec2 origin = {});

/// Modulation from `<dir>/<index>.ppm`, sized like the full canvas: value v
/// maps to 0.5 + v. Cropped to the window at `origin`.
Canvas external_texture(const std::filesystem::path& dir, std::size_t index, int width,
                        int height, Vec2 origin, int canvas_width, int canvas_height);

/// Soft render with the stroke colour multiplied by `modulation`.
Canvas apply_texture(const PaintStroke& stroke, const Canvas& modulation, const Canvas& canvas,
                     const RenderConfig& cfg);

}  // namespace brushrecon
