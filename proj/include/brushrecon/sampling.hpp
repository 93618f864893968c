#pragma once

// Uniform cubic B-spline resampling of planar multi-channel grids. C2 in the
// sample position; weights are non-negative, sum to one and reproduce linear
// functions.

#include <algorithm>
#include <cmath>

namespace brushrecon {

struct SplineTaps {
  int index[4];
  double weight[4];
  double dweight[4];
};

inline SplineTaps spline_taps(double x, int size) {
  const double fl = std::floor(x);
  const double f = x - fl;
  const int base = static_cast<int>(fl) - 1;
  const double f2 = f * f;
  const double f3 = f2 * f;
  const double u = 1.0 - f;
  SplineTaps t;
  t.weight[0] = u * u * u / 6.0;
  t.weight[1] = (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0;
  t.weight[2] = (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0) / 6.0;
  t.weight[3] = f3 / 6.0;
  t.dweight[0] = -0.5 * u * u;
  t.dweight[1] = 1.5 * f2 - 2.0 * f;
  t.dweight[2] = -1.5 * f2 + f + 0.5;
  t.dweight[3] = 0.5 * f2;
  for (int i = 0; i < 4; ++i) t.index[i] = std::clamp(base + i, 0, size - 1);
  return t;
}

/// Read-only view of a row-major grid with `C` interleaved channels.
template <int C>
struct GridView {
  const double* data;
  int width;
  int height;

  const double* at(int x, int y) const {
    return data + (static_cast<std::size_t>(y) * width + x) * C;
  }
};

/// Samples at continuous (x, y), pixel centres at integer coordinates.
/// Optional `dx`/`dy` receive the derivative of each channel along x and y.
template <int C>
inline void spline_sample(const GridView<C>& g, double x, double y, double* out,
                          double* dx = nullptr, double* dy = nullptr) {
  const SplineTaps tx = spline_taps(x, g.width);
  const SplineTaps ty = spline_taps(y, g.height);
  for (int c = 0; c < C; ++c) out[c] = 0.0;
  if (dx) for (int c = 0; c < C; ++c) dx[c] = 0.0;
  if (dy) for (int c = 0; c < C; ++c) dy[c] = 0.0;
  for (int j = 0; j < 4; ++j) {
    double row[C] = {};
    double drow[C] = {};
    for (int i = 0; i < 4; ++i) {
      const double* v = g.at(tx.index[i], ty.index[j]);
      for (int c = 0; c < C; ++c) {
        row[c] += tx.weight[i] * v[c];
        if (dx) drow[c] += tx.dweight[i] * v[c];
      }
    }
    for (int c = 0; c < C; ++c) {
      out[c] += ty.weight[j] * row[c];
      if (dx) dx[c] += ty.weight[j] * drow[c];
      if (dy) dy[c] += ty.dweight[j] * row[c];
    }
  }
}

/// Adjoint of spline_sample with respect to the grid values: adds
/// `grad[c] * weight` into the taps of `adjoint` (same layout as the grid).
template <int C>
inline void spline_scatter(double* adjoint, int width, int height, double x, double y,
                           const double* grad) {
  const SplineTaps tx = spline_taps(x, width);
  const SplineTaps ty = spline_taps(y, height);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      const double w = tx.weight[i] * ty.weight[j];
      double* a = adjoint + (static_cast<std::size_t>(ty.index[j]) * width + tx.index[i]) * C;
      for (int c = 0; c < C; ++c) a[c] += w * grad[c];
    }
  }
}

}  // namespace brushrecon
