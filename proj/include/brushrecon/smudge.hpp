#pragma once

#include <array>
#include <vector>

#include "brushrecon/diff.hpp"
#include "brushrecon/geometry.hpp"
#include "brushrecon/image.hpp"

namespace brushrecon {

struct SmudgeParams {
  double alpha_c = 0.7;  // canvas blending coefficient
  double alpha_s = 0.3;  // self-retention coefficient
  double a = 1.0;        // beta kernel shape
  double b = 1.0;
  int stamps = 20;       // N
  int patch_res = 64;    // P
  double tau = 1.0;      // soft disk boundary temperature, pixels
};

void validate(const SmudgeParams& p);

/// Pigment held by the brush on a fixed P x P local frame spanning the
/// stamp's 2r x 2r window.
struct BrushState {
  int res = 0;
  std::vector<double> rgb;   // P*P*3, row-major
  std::vector<double> mask;  // P*P soft circular footprint

  static BrushState zeros(int res);
};

/// Lower-triangular (N+1) x (N+1) row-stochastic kernel.
struct KernelMatrix {
  int n = 0;  // rows
  std::vector<double> values;

  double at(int k, int i) const { return values[static_cast<std::size_t>(k) * n + i]; }
  double& at(int k, int i) { return values[static_cast<std::size_t>(k) * n + i]; }
};

/// Patch pixel (i, j) samples the canvas at centre + radius * (u_i, v_j) with
/// u_i = 2 (i + 0.5) / P - 1, using edge-clamped cubic B-spline resampling.
BrushState extract_patch(const Canvas& canvas, Vec2 center, double radius, int res,
                         double tau = 1.0);

/// canvas <- m * patch + (1 - m) * canvas, m = soft disk mask times `weight`.
void write_patch(Canvas& canvas, const BrushState& state, Vec2 center, double radius,
                 double weight, double tau = 1.0);

/// Beta kernel over normalized arc positions (clamped to [1e-3, 1 - 1e-3]).
KernelMatrix beta_kernel(std::span<const double> arc_ts, double a, double b);

/// Internal brush states and canvas reads recorded by smudge_reference.
struct SmudgeTrace {
  std::vector<BrushState> brush;  // B_0 .. B_N
  std::vector<BrushState> reads;  // C_k^{k-1} for k = 1..N
};

/// Alternating canvas write / brush pickup, B_0 = C_0^0.
Canvas smudge_reference(const SmudgeStroke& stroke, const Canvas& canvas,
                        const SmudgeParams& params, SmudgeTrace* trace = nullptr);

/// Closed form B_k = A^k C_0 + sum_{i=1..k} A^{k-i} B C_i with
/// A = a_s + (1 - a_s) a_c and B = (1 - a_s)(1 - a_c). `reads[i-1]` is C_i.
/// Returns B_0 .. B_K.
std::vector<std::vector<double>> unrolled_brush(const std::vector<double>& initial,
                                                const std::vector<std::vector<double>>& reads,
                                                double alpha_c, double alpha_s);

/// Kernel-initialized smudge with ordered canvas and brush updates.
Canvas smudge_oneshot(const SmudgeStroke& stroke, const Canvas& canvas,
                      const SmudgeParams& params);
void smudge_oneshot_inplace(Canvas& canvas, const SmudgeStroke& stroke,
                            const SmudgeParams& params);

/// Reverse pass of smudge_oneshot. On entry `d_canvas` is the adjoint of the
/// output; on return it is the adjoint of the input canvas. Returns the
/// adjoint of the 8 geometry slots.
std::array<double, kSmudgeSlots> smudge_oneshot_backward(const SmudgeStroke& stroke,
                                                         const Canvas& input,
                                                         const SmudgeParams& params,
                                                         Canvas& d_canvas);

}  // namespace brushrecon
