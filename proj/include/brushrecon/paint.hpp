#pragma once

#include <array>
#include <span>
#include <vector>

#include "brushrecon/diff.hpp"
#include "brushrecon/geometry.hpp"
#include "brushrecon/image.hpp"

namespace brushrecon {

struct RenderConfig {
  int stamps = 20;     // N
  double tau = 1.0;    // sigmoid temperature of the soft boundary, pixels
  double gamma = 2.0;  // soft nearest-stamp temperature, pixels
};

void validate(const RenderConfig& cfg);

/// Soft coverage support ends this many tau outside the hard boundary.
inline constexpr double kMaskCutoff = 8.0;

/// Sigmoid of m/tau, shifted and rescaled so that it reaches exactly zero at
/// m = -kMaskCutoff * tau. Continuous everywhere, smooth away from the cutoff.
double soft_coverage(double m, double tau);
double soft_coverage_derivative(double m, double tau);

/// Soft stroke footprint stored over its (canvas-clipped) support box.
struct CoverageMask {
  int canvas_width = 0;
  int canvas_height = 0;
  Rect box;
  std::vector<double> values;  // box-local, row-major
  double area = 0.0;

  double at(int x, int y) const {
    if (!box.contains(x, y)) return 0.0;
    return values[static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0)];
  }
};

/// Pixel rectangle containing every pixel within `margin` of some stamp disk.
Rect stamp_bounds(const StampSequence& stamps, double margin, int width, int height);

// --- hard renderers ---------------------------------------------------------

/// Stamp-ordered alpha compositing (front-to-back transmittance stack).
Canvas render_paint_sequential(const PaintStroke& stroke, const Canvas& canvas,
                               const RenderConfig& cfg);
void paint_sequential_inplace(Canvas& canvas, const PaintStroke& stroke, const RenderConfig& cfg);

/// Order-free nearest-stamp renderer. `modulation`, when given, has the
/// canvas' dimensions and multiplies the stamp colour per channel (clamped).
Canvas render_paint_parallel(const PaintStroke& stroke, const Canvas& canvas,
                             const RenderConfig& cfg, const Canvas* modulation = nullptr);
void paint_parallel_inplace(Canvas& canvas, const PaintStroke& stroke, const RenderConfig& cfg,
                            const Canvas* modulation = nullptr);

/// One stamp with its identity; ties between equidistant stamps go to the
/// lower `index`.
struct IndexedStamp {
  Vec2 position;
  double radius = 0.0;
  Rgb color;
  int index = 0;
};

std::vector<IndexedStamp> indexed_stamps(const StampSequence& stamps);

/// Row-parallel kernel: per row, disk coverage from stamp chords and the
/// nearest stamp from the lower envelope of the per-stamp distance parabolas.
void composite_nearest_stamp(Canvas& canvas, std::span<const IndexedStamp> stamps, double alpha,
                             const Canvas* modulation = nullptr);

/// Serial brute-force reference of composite_nearest_stamp: every pixel
/// scans every stamp.
void composite_nearest_stamp_reference(Canvas& canvas, std::span<const IndexedStamp> stamps,
                                       double alpha, const Canvas* modulation = nullptr);

// --- differentiable renderer -------------------------------------------------

struct SoftPaintResult {
  Canvas canvas;
  CoverageMask mask;
};

SoftPaintResult render_paint_soft(const PaintStroke& stroke, const Canvas& canvas,
                                  const RenderConfig& cfg, const Canvas* modulation = nullptr);

/// Soft coverage of a stroke footprint, independent of colour.
CoverageMask stroke_mask(const StrokeGeometry& geometry, const RenderConfig& cfg, int width,
                         int height);

/// Upstream adjoints consumed by render_paint_soft_backward. Every pointer
/// is optional.
struct PaintSoftUpstream {
  const CoverageMask* d_mask = nullptr;         // adjoint of coverage, same box as the mask
  const StampAdjoint* d_stamps = nullptr;       // extra stamp-level adjoints
  Canvas* d_modulation = nullptr;               // output: canvas-sized, accumulated
};

/// Reverse pass of render_paint_soft. On entry `d_canvas` is the adjoint of
/// the output canvas; on return it is the adjoint of the input canvas.
/// Returns the adjoint of the 15 appearance slots.
std::array<double, kPaintSlots> render_paint_soft_backward(const PaintStroke& stroke,
                                                           const Canvas& input,
                                                           const RenderConfig& cfg,
                                                           const Canvas* modulation,
                                                           Canvas& d_canvas,
                                                           const PaintSoftUpstream& up = {});

/// Reverse pass of stroke_mask; returns the 8 geometry slot adjoints.
std::array<double, kGeometrySlots> stroke_mask_backward(const StrokeGeometry& geometry,
                                                        const RenderConfig& cfg,
                                                        const CoverageMask& d_mask,
                                                        const StampAdjoint* d_stamps = nullptr);

}  // namespace brushrecon
