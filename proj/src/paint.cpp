#include "brushrecon/paint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace brushrecon {

void validate(const RenderConfig& cfg) {
  if (cfg.stamps < 1) throw Error("render config: stamps must be >= 1");
  if (!(cfg.tau > 0.0)) throw Error("render config: tau must be > 0");
  if (!(cfg.gamma > 0.0)) throw Error("render config: gamma must be > 0");
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

const double kSigmoidFloor = sigmoid(-kMaskCutoff);

}  // namespace

double soft_coverage(double m, double tau) {
  const double z = m / tau;
  if (z <= -kMaskCutoff) return 0.0;
  return (sigmoid(z) - kSigmoidFloor) / (1.0 - kSigmoidFloor);
}

double soft_coverage_derivative(double m, double tau) {
  const double z = m / tau;
  if (z <= -kMaskCutoff) return 0.0;
  const double s = sigmoid(z);
  return s * (1.0 - s) / (tau * (1.0 - kSigmoidFloor));
}

Rect stamp_bounds(const StampSequence& stamps, double margin, int width, int height) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (int k = 0; k < stamps.size(); ++k) {
    const double reach = stamps.radius[k] + margin;
    xmin = std::min(xmin, stamps.position[k].x - reach);
    xmax = std::max(xmax, stamps.position[k].x + reach);
    ymin = std::min(ymin, stamps.position[k].y - reach);
    ymax = std::max(ymax, stamps.position[k].y + reach);
  }
  auto lo = [](double v, int limit) {
    return static_cast<int>(std::clamp(std::ceil(v), 0.0, static_cast<double>(limit)));
  };
  auto hi = [](double v, int limit) {
    return static_cast<int>(std::clamp(std::floor(v) + 1.0, 0.0, static_cast<double>(limit)));
  };
  Rect r{lo(xmin, width), lo(ymin, height), hi(xmax, width), hi(ymax, height)};
  if (r.empty()) return {0, 0, 0, 0};
  return r;
}

std::vector<IndexedStamp> indexed_stamps(const StampSequence& stamps) {
  std::vector<IndexedStamp> out(stamps.size());
  for (int k = 0; k < stamps.size(); ++k) {
    out[k] = {stamps.position[k], stamps.radius[k],
              stamps.color.empty() ? Rgb{} : stamps.color[k], k};
  }
  return out;
}

namespace {

Rgb textured(Rgb c, const Canvas* modulation, int x, int y) {
  if (!modulation) return c;
  const Rgb m = modulation->pixel(x, y);
  return {std::clamp(c.r * m.r, 0.0, 1.0), std::clamp(c.g * m.g, 0.0, 1.0),
          std::clamp(c.b * m.b, 0.0, 1.0)};
}

void blend_pixel(Canvas& canvas, int x, int y, Rgb color, double alpha) {
  const Rgb bg = canvas.pixel(x, y);
  canvas.set_pixel(x, y, alpha * color + (1.0 - alpha) * bg);
}

bool inside_disk(double x, double y, const IndexedStamp& s) {
  const double dx = x - s.position.x;
  const double dy = y - s.position.y;
  return dx * dx + dy * dy <= s.radius * s.radius;
}

double dist2(double x, double y, const IndexedStamp& s) {
  const double dx = x - s.position.x;
  const double dy = y - s.position.y;
  return dx * dx + dy * dy;
}

Rect hard_bounds(std::span<const IndexedStamp> stamps, const Canvas& canvas) {
  StampSequence tmp;
  for (const auto& s : stamps) {
    tmp.position.push_back(s.position);
    tmp.radius.push_back(s.radius);
  }
  return stamp_bounds(tmp, 0.0, canvas.width(), canvas.height());
}

}  // namespace

void composite_nearest_stamp_reference(Canvas& canvas, std::span<const IndexedStamp> stamps,
                                       double alpha, const Canvas* modulation) {
  if (stamps.empty()) return;
  const Rect box = hard_bounds(stamps, canvas);
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      bool covered = false;
      const IndexedStamp* best = nullptr;
      double best_d2 = INFINITY;
      for (const auto& s : stamps) {
        covered = covered || inside_disk(x, y, s);
        const double d2 = dist2(x, y, s);
        if (d2 < best_d2 || (d2 == best_d2 && s.index < best->index)) {
          best_d2 = d2;
          best = &s;
        }
      }
      if (covered) blend_pixel(canvas, x, y, textured(best->color, modulation, x, y), alpha);
    }
  }
}

void composite_nearest_stamp(Canvas& canvas, std::span<const IndexedStamp> stamps, double alpha,
                             const Canvas* modulation) {
  if (stamps.empty()) return;
  const Rect box = hard_bounds(stamps, canvas);
  if (box.empty()) return;

  // Sorted by centre x: the distance parabolas along a row then enter the
  // lower envelope in order of decreasing slope.
  std::vector<IndexedStamp> sorted(stamps.begin(), stamps.end());
  std::sort(sorted.begin(), sorted.end(), [](const IndexedStamp& a, const IndexedStamp& b) {
    if (a.position.x != b.position.x) return a.position.x < b.position.x;
    return a.index < b.index;
  });
  const int n = static_cast<int>(sorted.size());
  const int span_w = box.width();

#pragma omp parallel
  {
    std::vector<int> cover(span_w + 1);
    std::vector<int> hull;
    std::vector<double> offset2(n);  // (y - y_k)^2 per sorted stamp
    hull.reserve(n);

#pragma omp for schedule(dynamic, 4)
    for (int y = box.y0; y < box.y1; ++y) {
      std::fill(cover.begin(), cover.end(), 0);
      bool any = false;
      for (int i = 0; i < n; ++i) {
        const IndexedStamp& s = sorted[i];
        const double dy = y - s.position.y;
        offset2[i] = dy * dy;
        if (offset2[i] > s.radius * s.radius) continue;
        const double half = std::sqrt(s.radius * s.radius - offset2[i]);
        double lo = std::ceil(s.position.x - half);
        double hi = std::floor(s.position.x + half);
        while (inside_disk(lo - 1, y, s)) lo -= 1;
        while (lo <= hi && !inside_disk(lo, y, s)) lo += 1;
        while (inside_disk(hi + 1, y, s)) hi += 1;
        while (hi >= lo && !inside_disk(hi, y, s)) hi -= 1;
        lo = std::max(lo, static_cast<double>(box.x0));
        hi = std::min(hi, static_cast<double>(box.x1 - 1));
        if (lo > hi) continue;
        cover[static_cast<int>(lo) - box.x0] += 1;
        cover[static_cast<int>(hi) - box.x0 + 1] -= 1;
        any = true;
      }
      if (!any) continue;

      // Lower envelope of f_i(x) = (x - x_i)^2 + dy_i^2.
      hull.clear();
      auto cross = [&](int a, int b) {
        const double xa = sorted[a].position.x, xb = sorted[b].position.x;
        return (xb * xb + offset2[b] - xa * xa - offset2[a]) / (2.0 * (xb - xa));
      };
      for (int i = 0; i < n; ++i) {
        if (!hull.empty() && sorted[hull.back()].position.x == sorted[i].position.x) {
          // Same parabola shape; keep the lower one, lower index on ties.
          const int h = hull.back();
          if (offset2[i] < offset2[h]) {
            hull.pop_back();
          } else {
            continue;
          }
        }
        while (hull.size() >= 2 &&
               cross(hull[hull.size() - 2], i) <= cross(hull[hull.size() - 2], hull.back())) {
          hull.pop_back();
        }
        hull.push_back(i);
      }

      std::size_t j = 0;
      int running = 0;
      for (int x = box.x0; x < box.x1; ++x) {
        running += cover[x - box.x0];
        while (j + 1 < hull.size()) {
          const double dn = dist2(x, y, sorted[hull[j + 1]]);
          const double dc = dist2(x, y, sorted[hull[j]]);
          if (dn < dc || (dn == dc && sorted[hull[j + 1]].index < sorted[hull[j]].index)) {
            ++j;
          } else {
            break;
          }
        }
        if (running > 0) {
          const IndexedStamp& s = sorted[hull[j]];
          blend_pixel(canvas, x, y, textured(s.color, modulation, x, y), alpha);
        }
      }
    }
  }
}

void paint_parallel_inplace(Canvas& canvas, const PaintStroke& stroke, const RenderConfig& cfg,
                            const Canvas* modulation) {
  validate(cfg);
  const StampSequence stamps = sample_stamps(stroke, cfg.stamps);
  const auto indexed = indexed_stamps(stamps);
  composite_nearest_stamp(canvas, indexed, stroke.alpha, modulation);
}

Canvas render_paint_parallel(const PaintStroke& stroke, const Canvas& canvas,
                             const RenderConfig& cfg, const Canvas* modulation) {
  Canvas out = canvas;
  paint_parallel_inplace(out, stroke, cfg, modulation);
  return out;
}

void paint_sequential_inplace(Canvas& canvas, const PaintStroke& stroke,
                              const RenderConfig& cfg) {
  validate(cfg);
  const StampSequence stamps = sample_stamps(stroke, cfg.stamps);
  const Rect box = stamp_bounds(stamps, 0.0, canvas.width(), canvas.height());
  if (box.empty()) return;
  const double alpha = stroke.alpha;
  const int bw = box.width();
  const std::size_t cells = static_cast<std::size_t>(bw) * box.height();
  std::vector<double> premult(cells * 3, 0.0);
  std::vector<double> transmit(cells, 1.0);

  for (int k = 0; k < stamps.size(); ++k) {
    const Vec2 c = stamps.position[k];
    const double r = stamps.radius[k];
    const Rgb col = stamps.color[k];
    const int y0 = std::max(box.y0, static_cast<int>(std::ceil(c.y - r)));
    const int y1 = std::min(box.y1, static_cast<int>(std::floor(c.y + r)) + 1);
    const int x0 = std::max(box.x0, static_cast<int>(std::ceil(c.x - r)));
    const int x1 = std::min(box.x1, static_cast<int>(std::floor(c.x + r)) + 1);
#pragma omp parallel for schedule(static)
    for (int y = y0; y < y1; ++y) {
      const double dy = y - c.y;
      for (int x = x0; x < x1; ++x) {
        const double dx = x - c.x;
        if (dx * dx + dy * dy > r * r) continue;
        const std::size_t i = static_cast<std::size_t>(y - box.y0) * bw + (x - box.x0);
        const double w = alpha * transmit[i];
        premult[3 * i] += w * col.r;
        premult[3 * i + 1] += w * col.g;
        premult[3 * i + 2] += w * col.b;
        transmit[i] *= (1.0 - alpha);
      }
    }
  }

  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y - box.y0) * bw + (x - box.x0);
      if (transmit[i] == 1.0) continue;
      const Rgb bg = canvas.pixel(x, y);
      canvas.set_pixel(
          x, y,
          {premult[3 * i] + transmit[i] * bg.r, premult[3 * i + 1] + transmit[i] * bg.g,
           premult[3 * i + 2] + transmit[i] * bg.b});
    }
  }
}

Canvas render_paint_sequential(const PaintStroke& stroke, const Canvas& canvas,
                               const RenderConfig& cfg) {
  Canvas out = canvas;
  paint_sequential_inplace(out, stroke, cfg);
  return out;
}

// ---------------------------------------------------------------------------
// Soft renderer.
//
// Per pixel p, with d_k = |p - x_k| and s_k = r_k - d_k:
//   q = softmax(s / gamma),  m = sum_k q_k s_k          (smooth max of s)
//   w = softmax(-d / gamma), colour = sum_k w_k c_k     (soft nearest stamp)
//   coverage = soft_coverage(m, tau),  a = coverage * alpha
//   out = a * clamp(colour * modulation) + (1 - a) * canvas

namespace {

struct SoftScratch {
  std::vector<double> d, s, q, w;
  std::vector<double> rho;  // exp((r_k - r_max) / gamma)
  SoftScratch(const StampSequence& st, double gamma)
      : d(st.size()), s(st.size()), q(st.size()), w(st.size()), rho(st.size()) {
    const double rmax = *std::max_element(st.radius.begin(), st.radius.end());
    for (int k = 0; k < st.size(); ++k) rho[k] = std::exp((st.radius[k] - rmax) / gamma);
  }
};

struct SoftPixel {
  double m = 0.0;
  double coverage = 0.0;
  Rgb color;
};

/// Both softmaxes share gamma, so exp(s_k / gamma) = exp(-d_k / gamma) rho_k
/// up to normalization and one exponential per stamp serves both.
template <bool WithColor>
SoftPixel soft_eval(const StampSequence& st, double px, double py, double gamma, double tau,
                    SoftScratch& sc) {
  const int K = st.size();
  double smax = -INFINITY, dmin = INFINITY;
  for (int k = 0; k < K; ++k) {
    const double dx = px - st.position[k].x;
    const double dy = py - st.position[k].y;
    sc.d[k] = std::sqrt(dx * dx + dy * dy);
    sc.s[k] = st.radius[k] - sc.d[k];
    smax = std::max(smax, sc.s[k]);
    dmin = std::min(dmin, sc.d[k]);
  }
  SoftPixel out;
  if (smax <= -kMaskCutoff * tau) {
    // m <= smax: no coverage and no coverage gradient.
    out.m = smax;
    return out;
  }
  double qsum = 0.0, wsum = 0.0;
  for (int k = 0; k < K; ++k) {
    const double e = std::exp(-(sc.d[k] - dmin) / gamma);
    sc.w[k] = e;
    wsum += e;
    sc.q[k] = e * sc.rho[k];
    qsum += sc.q[k];
  }
  if (!(qsum > 1e-250)) {
    qsum = 0.0;
    for (int k = 0; k < K; ++k) {
      sc.q[k] = std::exp((sc.s[k] - smax) / gamma);
      qsum += sc.q[k];
    }
  }
  for (int k = 0; k < K; ++k) {
    sc.q[k] /= qsum;
    out.m += sc.q[k] * sc.s[k];
    if constexpr (WithColor) {
      sc.w[k] /= wsum;
      out.color = out.color + sc.w[k] * st.color[k];
    }
  }
  out.coverage = soft_coverage(out.m, tau);
  return out;
}

/// Accumulates the adjoint of one pixel into per-stamp rows of `acc`
/// (6 slots per stamp: dx, dy, dr, dc.r, dc.g, dc.b).
template <bool WithColor>
void soft_backprop(const StampSequence& st, double px, double py, double gamma, double tau,
                   const SoftScratch& sc, const SoftPixel& pix, double d_cov, Rgb d_color,
                   double* acc) {
  const int K = st.size();
  const double d_m = d_cov * soft_coverage_derivative(pix.m, tau);
  const double dc_dot = WithColor ? (d_color.r * pix.color.r + d_color.g * pix.color.g +
                                     d_color.b * pix.color.b)
                                  : 0.0;
  if (d_m == 0.0 && (!WithColor || (d_color.r == 0.0 && d_color.g == 0.0 && d_color.b == 0.0))) {
    return;
  }
  for (int k = 0; k < K; ++k) {
    double* a = acc + 6 * k;
    const double ds = d_m * sc.q[k] * (1.0 + (sc.s[k] - pix.m) / gamma);
    a[2] += ds;
    double dd = -ds;
    if constexpr (WithColor) {
      const Rgb ck = st.color[k];
      const double ck_dot = d_color.r * ck.r + d_color.g * ck.g + d_color.b * ck.b;
      dd -= sc.w[k] * (ck_dot - dc_dot) / gamma;
      a[3] += sc.w[k] * d_color.r;
      a[4] += sc.w[k] * d_color.g;
      a[5] += sc.w[k] * d_color.b;
    }
    if (sc.d[k] > 0.0) {
      a[0] += dd * (st.position[k].x - px) / sc.d[k];
      a[1] += dd * (st.position[k].y - py) / sc.d[k];
    }
  }
}

StampAdjoint reduce_rows(const std::vector<double>& acc, int rows, int K, bool with_color) {
  StampAdjoint adj = StampAdjoint::zeros(K, with_color);
  for (int row = 0; row < rows; ++row) {
    const double* a = acc.data() + static_cast<std::size_t>(row) * K * 6;
    for (int k = 0; k < K; ++k) {
      adj.position[k].x += a[6 * k];
      adj.position[k].y += a[6 * k + 1];
      adj.radius[k] += a[6 * k + 2];
      if (with_color) {
        adj.color[k].r += a[6 * k + 3];
        adj.color[k].g += a[6 * k + 4];
        adj.color[k].b += a[6 * k + 5];
      }
    }
  }
  return adj;
}

void add_stamp_adjoint(StampAdjoint& dst, const StampAdjoint* src) {
  if (!src) return;
  for (std::size_t k = 0; k < dst.position.size(); ++k) {
    dst.position[k] = dst.position[k] + src->position[k];
    dst.radius[k] += src->radius[k];
    if (!dst.color.empty() && !src->color.empty()) dst.color[k] = dst.color[k] + src->color[k];
  }
}

CoverageMask empty_mask(int width, int height, const Rect& box) {
  CoverageMask mask;
  mask.canvas_width = width;
  mask.canvas_height = height;
  mask.box = box;
  mask.values.assign(static_cast<std::size_t>(box.width()) * box.height(), 0.0);
  return mask;
}

double sum_rows(const std::vector<double>& per_row) {
  return std::accumulate(per_row.begin(), per_row.end(), 0.0);
}

}  // namespace

SoftPaintResult render_paint_soft(const PaintStroke& stroke, const Canvas& canvas,
                                  const RenderConfig& cfg, const Canvas* modulation) {
  validate(cfg);
  const StampSequence st = sample_stamps(stroke, cfg.stamps);
  const Rect box = stamp_bounds(st, kMaskCutoff * cfg.tau, canvas.width(), canvas.height());
  SoftPaintResult res{canvas, empty_mask(canvas.width(), canvas.height(), box)};
  if (box.empty()) return res;
  std::vector<double> row_area(box.height(), 0.0);

#pragma omp parallel
  {
    SoftScratch sc(st, cfg.gamma);
#pragma omp for schedule(dynamic, 2)
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        const SoftPixel pix = soft_eval<true>(st, x, y, cfg.gamma, cfg.tau, sc);
        res.mask.values[static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0)] =
            pix.coverage;
        row_area[y - box.y0] += pix.coverage;
        if (pix.coverage == 0.0) continue;
        const double a = pix.coverage * stroke.alpha;
        blend_pixel(res.canvas, x, y, textured(pix.color, modulation, x, y), a);
      }
    }
  }
  res.mask.area = sum_rows(row_area);
  return res;
}

CoverageMask stroke_mask(const StrokeGeometry& geometry, const RenderConfig& cfg, int width,
                         int height) {
  validate(cfg);
  const StampSequence st = sample_stamps(geometry, cfg.stamps);
  const Rect box = stamp_bounds(st, kMaskCutoff * cfg.tau, width, height);
  CoverageMask mask = empty_mask(width, height, box);
  if (box.empty()) return mask;
  std::vector<double> row_area(box.height(), 0.0);
#pragma omp parallel
  {
    SoftScratch sc(st, cfg.gamma);
#pragma omp for schedule(dynamic, 2)
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        const double c = soft_eval<false>(st, x, y, cfg.gamma, cfg.tau, sc).coverage;
        mask.values[static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0)] = c;
        row_area[y - box.y0] += c;
      }
    }
  }
  mask.area = sum_rows(row_area);
  return mask;
}

std::array<double, kPaintSlots> render_paint_soft_backward(const PaintStroke& stroke,
                                                           const Canvas& input,
                                                           const RenderConfig& cfg,
                                                           const Canvas* modulation,
                                                           Canvas& d_canvas,
                                                           const PaintSoftUpstream& up) {
  validate(cfg);
  require_same_size(input, d_canvas, "render_paint_soft_backward");
  const StampSequence st = sample_stamps(stroke, cfg.stamps);
  const int K = st.size();
  const Rect box = stamp_bounds(st, kMaskCutoff * cfg.tau, input.width(), input.height());
  std::array<double, kPaintSlots> grad{};
  StampAdjoint adj = StampAdjoint::zeros(K, true);

  if (!box.empty()) {
    const int rows = box.height();
    std::vector<double> acc(static_cast<std::size_t>(rows) * K * 6, 0.0);
    std::vector<double> row_alpha(rows, 0.0);
#pragma omp parallel
    {
      SoftScratch sc(st, cfg.gamma);
#pragma omp for schedule(dynamic, 2)
      for (int y = box.y0; y < box.y1; ++y) {
        double* row_acc = acc.data() + static_cast<std::size_t>(y - box.y0) * K * 6;
        for (int x = box.x0; x < box.x1; ++x) {
          const Rgb g = d_canvas.pixel(x, y);
          const double gm = up.d_mask ? up.d_mask->at(x, y) : 0.0;
          if (gm == 0.0 && g.r == 0.0 && g.g == 0.0 && g.b == 0.0) continue;
          const SoftPixel pix = soft_eval<true>(st, x, y, cfg.gamma, cfg.tau, sc);
          if (pix.coverage == 0.0 && gm == 0.0) continue;
          const Rgb bg = input.pixel(x, y);
          const Rgb ct = textured(pix.color, modulation, x, y);
          const double a = pix.coverage * stroke.alpha;
          const double d_a = g.r * (ct.r - bg.r) + g.g * (ct.g - bg.g) + g.b * (ct.b - bg.b);
          d_canvas.set_pixel(x, y, (1.0 - a) * g);
          Rgb d_color = a * g;
          if (modulation) {
            const Rgb mod = modulation->pixel(x, y);
            Rgb d_mod;
            for (int c = 0; c < 3; ++c) {
              const double raw = pix.color[c] * mod[c];
              if (raw > 0.0 && raw < 1.0) {
                d_mod[c] = d_color[c] * pix.color[c];
                d_color[c] = d_color[c] * mod[c];
              } else {
                d_color[c] = 0.0;
              }
            }
            if (up.d_modulation) {
              for (int c = 0; c < 3; ++c) up.d_modulation->at(x, y, c) += d_mod[c];
            }
          }
          row_alpha[y - box.y0] += d_a * pix.coverage;
          const double d_cov = d_a * stroke.alpha + gm;
          soft_backprop<true>(st, x, y, cfg.gamma, cfg.tau, sc, pix, d_cov, d_color, row_acc);
        }
      }
    }
    adj = reduce_rows(acc, rows, K, true);
    grad[kAlpha] = sum_rows(row_alpha);
  }
  add_stamp_adjoint(adj, up.d_stamps);
  backprop_stamps(st, adj, grad);
  return grad;
}

std::array<double, kGeometrySlots> stroke_mask_backward(const StrokeGeometry& geometry,
                                                        const RenderConfig& cfg,
                                                        const CoverageMask& d_mask,
                                                        const StampAdjoint* d_stamps) {
  validate(cfg);
  const StampSequence st = sample_stamps(geometry, cfg.stamps);
  const int K = st.size();
  const Rect box = stamp_bounds(st, kMaskCutoff * cfg.tau, d_mask.canvas_width,
                                d_mask.canvas_height);
  std::array<double, kGeometrySlots> grad{};
  StampAdjoint adj = StampAdjoint::zeros(K, false);
  if (!box.empty()) {
    const int rows = box.height();
    std::vector<double> acc(static_cast<std::size_t>(rows) * K * 6, 0.0);
#pragma omp parallel
    {
      SoftScratch sc(st, cfg.gamma);
#pragma omp for schedule(dynamic, 2)
      for (int y = box.y0; y < box.y1; ++y) {
        double* row_acc = acc.data() + static_cast<std::size_t>(y - box.y0) * K * 6;
        for (int x = box.x0; x < box.x1; ++x) {
          const double gm = d_mask.at(x, y);
          if (gm == 0.0) continue;
          const SoftPixel pix = soft_eval<false>(st, x, y, cfg.gamma, cfg.tau, sc);
          soft_backprop<false>(st, x, y, cfg.gamma, cfg.tau, sc, pix, gm, Rgb{}, row_acc);
        }
      }
    }
    adj = reduce_rows(acc, rows, K, false);
  }
  add_stamp_adjoint(adj, d_stamps);
  backprop_stamps(st, adj, grad);
  return grad;
}

}  // namespace brushrecon
