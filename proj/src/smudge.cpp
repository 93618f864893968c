#include "brushrecon/smudge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "brushrecon/paint.hpp"
#include "brushrecon/sampling.hpp"

namespace brushrecon {

void validate(const SmudgeParams& p) {
  if (!(p.alpha_c >= 0.0 && p.alpha_c <= 1.0)) throw Error("smudge: alpha_c must lie in [0,1]");
  if (!(p.alpha_s >= 0.0 && p.alpha_s <= 1.0)) throw Error("smudge: alpha_s must lie in [0,1]");
  if (!(p.a > 0.0) || !(p.b > 0.0)) throw Error("smudge: kernel shape a, b must be > 0");
  if (p.stamps < 1) throw Error("smudge: stamps must be >= 1");
  if (p.patch_res < 1) throw Error("smudge: patch_res must be >= 1");
  if (!(p.tau > 0.0)) throw Error("smudge: tau must be > 0");
}

BrushState BrushState::zeros(int res) {
  BrushState s;
  s.res = res;
  s.rgb.assign(static_cast<std::size_t>(res) * res * 3, 0.0);
  s.mask.assign(static_cast<std::size_t>(res) * res, 0.0);
  return s;
}

namespace {

double patch_offset(int i, int res) { return 2.0 * (i + 0.5) / res - 1.0; }

/// Continuous patch index of local offset u in [-1, 1].
double patch_coord(double u, int res) { return 0.5 * (u + 1.0) * res - 0.5; }

GridView<3> view(const Canvas& c) { return {c.data().data(), c.width(), c.height()}; }
GridView<3> view(const BrushState& s) { return {s.rgb.data(), s.res, s.res}; }

/// Pixels touched by a stamp write: the disk plus the soft-mask margin.
Rect write_bounds(Vec2 c, double r, double tau, int w, int h) {
  const double reach = r + kMaskCutoff * tau;
  Rect box{static_cast<int>(std::ceil(c.x - reach)), static_cast<int>(std::ceil(c.y - reach)),
           static_cast<int>(std::floor(c.x + reach)) + 1,
           static_cast<int>(std::floor(c.y + reach)) + 1};
  box = intersect(box, Rect{0, 0, w, h});
  if (box.empty()) return {0, 0, 0, 0};
  return box;
}

void blend_into(BrushState& out, double wa, const BrushState& a, double wb, const BrushState& b) {
  for (std::size_t i = 0; i < out.rgb.size(); ++i) out.rgb[i] = wa * a.rgb[i] + wb * b.rgb[i];
}

}  // namespace

BrushState extract_patch(const Canvas& canvas, Vec2 center, double radius, int res, double tau) {
  BrushState s = BrushState::zeros(res);
  const GridView<3> g = view(canvas);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < res; ++j) {
    const double v = patch_offset(j, res);
    for (int i = 0; i < res; ++i) {
      const double u = patch_offset(i, res);
      const std::size_t p = static_cast<std::size_t>(j) * res + i;
      spline_sample<3>(g, center.x + radius * u, center.y + radius * v, &s.rgb[3 * p]);
      s.mask[p] = soft_coverage(radius * (1.0 - std::sqrt(u * u + v * v)), tau);
    }
  }
  return s;
}

void write_patch(Canvas& canvas, const BrushState& state, Vec2 center, double radius,
                 double weight, double tau) {
  if (weight == 0.0) return;
  const Rect box = write_bounds(center, radius, tau, canvas.width(), canvas.height());
  const GridView<3> g = view(state);
#pragma omp parallel for schedule(static)
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const double dx = x - center.x, dy = y - center.y;
      const double m = soft_coverage(radius - std::sqrt(dx * dx + dy * dy), tau) * weight;
      if (m == 0.0) continue;
      double v[3];
      spline_sample<3>(g, patch_coord(dx / radius, state.res), patch_coord(dy / radius, state.res),
                       v);
      for (int c = 0; c < 3; ++c) canvas.at(x, y, c) = m * v[c] + (1.0 - m) * canvas.at(x, y, c);
    }
  }
}

namespace {

constexpr double kArcClamp = 1e-3;

double kernel_weight(double t, double a, double b) {
  const double tc = std::clamp(t, kArcClamp, 1.0 - kArcClamp);
  const double fa = (a == 1.0) ? 1.0 : std::pow(tc, a - 1.0);
  const double fb = (b == 1.0) ? 1.0 : std::pow(1.0 - tc, b - 1.0);
  return fa * fb;
}

}  // namespace

KernelMatrix beta_kernel(std::span<const double> arc_ts, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("beta_kernel: a and b must be > 0");
  const int n = static_cast<int>(arc_ts.size());
  KernelMatrix K;
  K.n = n;
  K.values.assign(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = kernel_weight(arc_ts[i], a, b);
  double running = 0.0;
  for (int k = 0; k < n; ++k) {
    running += f[k];
    if (!(running > 0.0)) throw Error("beta_kernel: row " + std::to_string(k) + " sums to zero");
    for (int i = 0; i <= k; ++i) K.at(k, i) = f[i] / running;
  }
  return K;
}

Canvas smudge_reference(const SmudgeStroke& stroke, const Canvas& canvas,
                        const SmudgeParams& params, SmudgeTrace* trace) {
  validate(params);
  const StampSequence st = sample_stamps(stroke, params.stamps);
  const int P = params.patch_res;
  Canvas out = canvas;
  BrushState brush = extract_patch(out, st.position[0], st.radius[0], P, params.tau);
  BrushState written = BrushState::zeros(P);
  if (trace) {
    trace->brush.assign(1, brush);
    trace->reads.clear();
  }
  for (int k = 1; k < st.size(); ++k) {
    const BrushState read = extract_patch(out, st.position[k], st.radius[k], P, params.tau);
    written.mask = read.mask;
    blend_into(written, params.alpha_c, brush, 1.0 - params.alpha_c, read);
    write_patch(out, written, st.position[k], st.radius[k], 1.0, params.tau);
    blend_into(brush, params.alpha_s, brush, 1.0 - params.alpha_s, written);
    if (trace) {
      trace->reads.push_back(read);
      trace->brush.push_back(brush);
    }
  }
  return out;
}

std::vector<std::vector<double>> unrolled_brush(const std::vector<double>& initial,
                                                const std::vector<std::vector<double>>& reads,
                                                double alpha_c, double alpha_s) {
  const double A = alpha_s + (1.0 - alpha_s) * alpha_c;
  const double B = (1.0 - alpha_s) * (1.0 - alpha_c);
  const std::size_t K = reads.size();
  std::vector<std::vector<double>> out(K + 1, std::vector<double>(initial.size(), 0.0));
  for (std::size_t k = 0; k <= K; ++k) {
    for (std::size_t c = 0; c < initial.size(); ++c) {
      double v = std::pow(A, static_cast<double>(k)) * initial[c];
      for (std::size_t i = 1; i <= k; ++i) {
        v += std::pow(A, static_cast<double>(k - i)) * B * reads[i - 1][c];
      }
      out[k][c] = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-shot smudge.

namespace {

struct OneShotState {
  StampSequence stamps;
  std::vector<double> arc_t;
  KernelMatrix kernel;
  std::vector<BrushState> initial;  // C_i^0
  std::vector<BrushState> seeded;   // B_k^0
};

OneShotState prepare_oneshot(const SmudgeStroke& stroke, const Canvas& canvas,
                             const SmudgeParams& params) {
  validate(params);
  OneShotState s;
  s.stamps = sample_stamps(stroke, params.stamps);
  const int n = s.stamps.size();
  ArcLengths arcs{s.stamps.arc, s.stamps.length};
  s.arc_t = normalized_arc_positions(arcs);
  s.kernel = beta_kernel(s.arc_t, params.a, params.b);
  s.initial.resize(n);
  for (int i = 0; i < n; ++i) {
    s.initial[i] =
        extract_patch(canvas, s.stamps.position[i], s.stamps.radius[i], params.patch_res,
                      params.tau);
  }
  s.seeded.assign(n, BrushState::zeros(params.patch_res));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    auto& out = s.seeded[k].rgb;
    for (int i = 0; i <= k; ++i) {
      const double w = s.kernel.at(k, i);
      const auto& src = s.initial[i].rgb;
      for (std::size_t q = 0; q < out.size(); ++q) out[q] += w * src[q];
    }
  }
  return s;
}

}  // namespace

void smudge_oneshot_inplace(Canvas& canvas, const SmudgeStroke& stroke,
                            const SmudgeParams& params) {
  const OneShotState s = prepare_oneshot(stroke, canvas, params);
  const int P = params.patch_res;
  BrushState brush = s.seeded[0];
  BrushState written = BrushState::zeros(P);
  for (int k = 1; k < s.stamps.size(); ++k) {
    const BrushState read =
        extract_patch(canvas, s.stamps.position[k], s.stamps.radius[k], P, params.tau);
    blend_into(written, params.alpha_c, brush, 1.0 - params.alpha_c, read);
    write_patch(canvas, written, s.stamps.position[k], s.stamps.radius[k], 1.0, params.tau);
    blend_into(brush, params.alpha_s, s.seeded[k], 1.0 - params.alpha_s, written);
  }
}

Canvas smudge_oneshot(const SmudgeStroke& stroke, const Canvas& canvas,
                      const SmudgeParams& params) {
  Canvas out = canvas;
  smudge_oneshot_inplace(out, stroke, params);
  return out;
}

namespace {

/// Adjoint of extract_patch: scatters `d_patch` into `d_canvas` and returns
/// the adjoint of (centre.x, centre.y, radius).
std::array<double, 3> extract_patch_backward(const Canvas& canvas, Vec2 center, double radius,
                                             const BrushState& d_patch, Canvas& d_canvas) {
  const int P = d_patch.res;
  const GridView<3> g = view(canvas);
  std::array<double, 3> d{};
  double* dc = d_canvas.data().data();
  for (int j = 0; j < P; ++j) {
    const double v = patch_offset(j, P);
    for (int i = 0; i < P; ++i) {
      const double u = patch_offset(i, P);
      const double* gp = &d_patch.rgb[3 * (static_cast<std::size_t>(j) * P + i)];
      if (gp[0] == 0.0 && gp[1] == 0.0 && gp[2] == 0.0) continue;
      const double sx = center.x + radius * u, sy = center.y + radius * v;
      double val[3], ddx[3], ddy[3];
      spline_sample<3>(g, sx, sy, val, ddx, ddy);
      double gx = 0.0, gy = 0.0;
      for (int c = 0; c < 3; ++c) {
        gx += gp[c] * ddx[c];
        gy += gp[c] * ddy[c];
      }
      d[0] += gx;
      d[1] += gy;
      d[2] += gx * u + gy * v;
      spline_scatter<3>(dc, canvas.width(), canvas.height(), sx, sy, gp);
    }
  }
  return d;
}

struct WriteAdjoint {
  std::array<double, 3> geometry{};  // centre.x, centre.y, radius
};

/// Adjoint of write_patch with weight 1. `before` is the canvas prior to the
/// write. `d_canvas` enters as the adjoint of the written canvas and leaves
/// as the adjoint of `before`; `d_state` accumulates the patch adjoint.
WriteAdjoint write_patch_backward(const Canvas& before, const BrushState& state, Vec2 center,
                                  double radius, double tau, Canvas& d_canvas,
                                  BrushState& d_state) {
  WriteAdjoint out;
  const int P = state.res;
  const Rect box = write_bounds(center, radius, tau, before.width(), before.height());
  const GridView<3> g = view(state);
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const double dx = x - center.x, dy = y - center.y;
      const double dist = std::sqrt(dx * dx + dy * dy);
      const double m = soft_coverage(radius - dist, tau);
      if (m == 0.0) continue;
      const double qx = patch_coord(dx / radius, P), qy = patch_coord(dy / radius, P);
      double v[3], vdx[3], vdy[3];
      spline_sample<3>(g, qx, qy, v, vdx, vdy);
      double gout[3], d_val[3];
      double d_m = 0.0, d_qx = 0.0, d_qy = 0.0;
      for (int c = 0; c < 3; ++c) {
        gout[c] = d_canvas.at(x, y, c);
        d_m += gout[c] * (v[c] - before.at(x, y, c));
        d_val[c] = m * gout[c];
        d_qx += d_val[c] * vdx[c];
        d_qy += d_val[c] * vdy[c];
        d_canvas.at(x, y, c) = (1.0 - m) * gout[c];
      }
      spline_scatter<3>(d_state.rgb.data(), P, P, qx, qy, d_val);
      // q = (p - centre) / radius * P / 2 + (P - 1) / 2
      const double s = 0.5 * P / radius;
      out.geometry[0] -= s * d_qx;
      out.geometry[1] -= s * d_qy;
      out.geometry[2] -= s * (d_qx * dx + d_qy * dy) / radius;
      const double dmask = d_m * soft_coverage_derivative(radius - dist, tau);
      out.geometry[2] += dmask;
      if (dist > 0.0) {
        out.geometry[0] += dmask * dx / dist;
        out.geometry[1] += dmask * dy / dist;
      }
    }
  }
  return out;
}

void add_scaled(BrushState& dst, double w, const BrushState& src) {
  for (std::size_t i = 0; i < dst.rgb.size(); ++i) dst.rgb[i] += w * src.rgb[i];
}

void add_stamp(StampAdjoint& adj, int k, const std::array<double, 3>& d) {
  adj.position[k].x += d[0];
  adj.position[k].y += d[1];
  adj.radius[k] += d[2];
}

}  // namespace

std::array<double, kSmudgeSlots> smudge_oneshot_backward(const SmudgeStroke& stroke,
                                                         const Canvas& input,
                                                         const SmudgeParams& params,
                                                         Canvas& d_canvas) {
  require_same_size(input, d_canvas, "smudge_oneshot_backward");
  const OneShotState s = prepare_oneshot(stroke, input, params);
  const int P = params.patch_res;
  const int n = s.stamps.size();
  const double ac = params.alpha_c, as = params.alpha_s;

  // Forward replay, logging what each write overwrites.
  struct Step {
    Rect box;
    Canvas undo;
    BrushState brush_before;  // B_{k-1}
    BrushState written;       // C_k^k
  };
  std::vector<Step> steps(n);
  Canvas canvas = input;
  BrushState brush = s.seeded[0];
  for (int k = 1; k < n; ++k) {
    Step& st = steps[k];
    const Vec2 c = s.stamps.position[k];
    const double r = s.stamps.radius[k];
    st.brush_before = brush;
    const BrushState read = extract_patch(canvas, c, r, P, params.tau);
    st.written = BrushState::zeros(P);
    blend_into(st.written, ac, brush, 1.0 - ac, read);
    st.box = write_bounds(c, r, params.tau, canvas.width(), canvas.height());
    st.undo = crop(canvas, st.box);
    write_patch(canvas, st.written, c, r, 1.0, params.tau);
    blend_into(brush, as, s.seeded[k], 1.0 - as, st.written);
  }

  StampAdjoint adj = StampAdjoint::zeros(n, false);
  std::vector<BrushState> d_seeded(n, BrushState::zeros(P));
  BrushState d_brush = BrushState::zeros(P);  // adjoint of B_k
  BrushState d_written = BrushState::zeros(P);
  for (int k = n - 1; k >= 1; --k) {
    Step& st = steps[k];
    const Vec2 c = s.stamps.position[k];
    const double r = s.stamps.radius[k];
    // B_k = as * B_k^0 + (1 - as) * C_k^k
    add_scaled(d_seeded[k], as, d_brush);
    std::fill(d_written.rgb.begin(), d_written.rgb.end(), 0.0);
    add_scaled(d_written, 1.0 - as, d_brush);
    // Undo the write, then pull the adjoint through it.
    paste(canvas, st.undo, st.box);
    add_stamp(adj, k,
              write_patch_backward(canvas, st.written, c, r, params.tau, d_canvas, d_written)
                  .geometry);
    // C_k^k = ac * B_{k-1} + (1 - ac) * read
    std::fill(d_brush.rgb.begin(), d_brush.rgb.end(), 0.0);
    add_scaled(d_brush, ac, d_written);
    BrushState d_read = BrushState::zeros(P);
    add_scaled(d_read, 1.0 - ac, d_written);
    add_stamp(adj, k, extract_patch_backward(canvas, c, r, d_read, d_canvas));
  }
  // B_0 = B_0^0
  add_scaled(d_seeded[0], 1.0, d_brush);

  // B_k^0 = sum_i K_ki C_i^0
  std::vector<BrushState> d_initial(n, BrushState::zeros(P));
  std::vector<double> d_kernel(static_cast<std::size_t>(n) * n, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    for (int k = i; k < n; ++k) {
      add_scaled(d_initial[i], s.kernel.at(k, i), d_seeded[k]);
      double dot = 0.0;
      const auto& a = d_seeded[k].rgb;
      const auto& b = s.initial[i].rgb;
      for (std::size_t q = 0; q < a.size(); ++q) dot += a[q] * b[q];
      d_kernel[static_cast<std::size_t>(k) * n + i] = dot;
    }
  }
  for (int i = 0; i < n; ++i) {
    add_stamp(adj, i,
              extract_patch_backward(input, s.stamps.position[i], s.stamps.radius[i],
                                     d_initial[i], d_canvas));
  }

  // Kernel rows K_ki = f_i / sum_{m<=k} f_m with f from the arc positions.
  if (s.stamps.length > 0.0) {
    std::vector<double> f(n), df(n, 0.0), dt(n, 0.0);
    for (int i = 0; i < n; ++i) f[i] = kernel_weight(s.arc_t[i], params.a, params.b);
    double row_sum = 0.0;
    for (int k = 0; k < n; ++k) {
      row_sum += f[k];
      double weighted = 0.0;
      for (int i = 0; i <= k; ++i) weighted += d_kernel[static_cast<std::size_t>(k) * n + i] * f[i];
      for (int j = 0; j <= k; ++j) {
        df[j] += d_kernel[static_cast<std::size_t>(k) * n + j] / row_sum -
                 weighted / (row_sum * row_sum);
      }
    }
    // t_N is pinned to 1; only interior positions move with the geometry.
    std::vector<double> d_arc(n, 0.0);
    double d_length = 0.0;
    const double L = s.stamps.length;
    for (int i = 0; i + 1 < n; ++i) {
      const double t = s.arc_t[i];
      if (t <= kArcClamp || t >= 1.0 - kArcClamp) continue;
      dt[i] = df[i] * f[i] * ((params.a - 1.0) / t - (params.b - 1.0) / (1.0 - t));
      d_arc[i] += dt[i] / L;
      d_length -= dt[i] * s.stamps.arc[i] / (L * L);
    }
    backprop_arc_lengths(s.stamps.position, d_arc, d_length, adj.position);
  }

  std::array<double, kSmudgeSlots> grad{};
  backprop_stamps(s.stamps, adj, grad);
  return grad;
}

}  // namespace brushrecon
