#include "brushrecon/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "brushrecon/sampling.hpp"

namespace brushrecon {

LossWeights LossWeights::smudge_phase() const {
  LossWeights w = *this;
  w.grad_alpha *= smudge_grad_alpha_scale;
  w.area *= smudge_area_scale;
  return w;
}

LossWeights LossWeights::style_only() const {
  LossWeights w = *this;
  w.seg = 0.0;
  w.ot = 0.0;
  w.area = 0.0;
  return w;
}

void validate(const LossWeights& w) {
  const double vals[] = {w.pixel, w.perc,       w.grad,      w.seg,
                         w.ot,    w.area,       w.grad_alpha, w.grad_beta,
                         w.smudge_grad_alpha_scale, w.smudge_area_scale};
  for (double v : vals)
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("loss weights must be finite and >= 0");
  if (!(w.eta > 0.0)) throw Error("loss weights: eta must be > 0");
}

void validate(const OTConfig& c) {
  if (c.grid < 2) throw Error("ot: grid must be >= 2");
  if (c.iterations < 1) throw Error("ot: iterations must be >= 1");
  if (!(c.lambda > 0.0)) throw Error("ot: lambda must be > 0");
}

// --- pixel / perceptual -------------------------------------------------------

double pixel_loss(const Canvas& render, const Canvas& target, Canvas* d_render, double scale) {
  require_same_size(render, target, "pixel_loss");
  const auto r = render.data();
  const auto t = target.data();
  const double inv = 1.0 / static_cast<double>(r.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) sum += std::abs(r[i] - t[i]);
  if (d_render) {
    auto d = d_render->data();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double diff = r[i] - t[i];
      d[i] += scale * inv * static_cast<double>((diff > 0.0) - (diff < 0.0));
    }
  }
  return sum * inv;
}

double perceptual_loss(const Canvas& render, const Canvas& target,
                       const FeatureExtractorHook* hook, Canvas* d_render, double scale) {
  if (!hook || !*hook) return 0.0;
  require_same_size(render, target, "perceptual_loss");
  const FeatureMaps fr = hook->extract(render);
  const FeatureMaps ft = hook->extract(target);
  if (fr.size() != ft.size()) throw Error("perceptual_loss: layer count mismatch");
  double loss = 0.0;
  FeatureMaps d(fr.size());
  for (std::size_t l = 0; l < fr.size(); ++l) {
    if (fr[l].size() != ft[l].size()) throw Error("perceptual_loss: layer size mismatch");
    if (fr[l].empty()) continue;
    const double inv = 1.0 / static_cast<double>(fr[l].size());
    d[l].resize(fr[l].size());
    double s = 0.0;
    for (std::size_t i = 0; i < fr[l].size(); ++i) {
      const double diff = fr[l][i] - ft[l][i];
      s += std::abs(diff);
      d[l][i] = scale * inv * static_cast<double>((diff > 0.0) - (diff < 0.0));
    }
    loss += s * inv;
  }
  if (d_render) {
    if (!hook->backward) throw Error("perceptual_loss: hook has no backward pass");
    hook->backward(render, d, *d_render);
  }
  return loss;
}

// --- gradient alignment -----------------------------------------------------------

double smooth_abs(double x) {
  return x * x / std::sqrt(x * x + kSmoothAbsDelta * kSmoothAbsDelta);
}

double smooth_abs_derivative(double x) {
  const double q = x * x + kSmoothAbsDelta * kSmoothAbsDelta;
  return x * (x * x + 2.0 * kSmoothAbsDelta * kSmoothAbsDelta) / (q * std::sqrt(q));
}

namespace {

constexpr double kDirFloor = 1e-24;

std::vector<double> interleave(const GradientField& g) {
  std::vector<double> out(g.gx.size() * 2);
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    out[2 * i] = g.gx[i];
    out[2 * i + 1] = g.gy[i];
  }
  return out;
}

/// Adds the transpose of the luminance Sobel operator applied to the
/// interleaved (gx, gy) adjoint `d_field` into `d_render`.
void sobel_backward(const std::vector<double>& d_field, int w, int h, Canvas& d_render) {
  static const double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static const double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  const double lw[3] = {0.299, 0.587, 0.114};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double gx = d_field[2 * i], gy = d_field[2 * i + 1];
      if (gx == 0.0 && gy == 0.0) continue;
      for (int j = -1; j <= 1; ++j) {
        for (int k = -1; k <= 1; ++k) {
          const double dl = kx[j + 1][k + 1] * gx + ky[j + 1][k + 1] * gy;
          if (dl == 0.0) continue;
          const int sx = std::clamp(x + k, 0, w - 1), sy = std::clamp(y + j, 0, h - 1);
          for (int c = 0; c < 3; ++c) d_render.at(sx, sy, c) += lw[c] * dl;
        }
      }
    }
  }
}

struct AlignTerm {
  double value = 0.0;
  double d_r[2] = {0.0, 0.0};  // d/d(gx_r, gy_r)
  double d_t[2] = {0.0, 0.0};  // d/d(gx_t, gy_t)
};

AlignTerm align_term(const double* gr, const double* gt, double alpha, double beta) {
  AlignTerm out;
  const double pr = gr[0] * gr[0] + gr[1] * gr[1];
  const double pt = gt[0] * gt[0] + gt[1] * gt[1];
  const double mr = std::sqrt(pr), mt = std::sqrt(pt);
  const double diff = mr - mt;
  out.value = alpha * smooth_abs(diff);
  double d_mr = alpha * smooth_abs_derivative(diff);
  double d_mt = -d_mr;
  const double P = pr * pt;
  if (beta != 0.0 && P >= kDirFloor) {
    const double sd = smooth_abs_derivative(diff);
    const double S = 0.5 * (mr + mt - smooth_abs(diff));
    const double cross = gr[0] * gt[1] - gr[1] * gt[0];
    const double Q = cross * cross;
    out.value += beta * S * Q / P;
    d_mr += beta * 0.5 * (1.0 - sd) * Q / P;
    d_mt += beta * 0.5 * (1.0 + sd) * Q / P;
    const double c2 = beta * S * 2.0 * cross / P;
    const double p2 = beta * S * Q / (P * P) * 2.0;
    out.d_r[0] += c2 * gt[1] - p2 * gr[0] * pt;
    out.d_r[1] += -c2 * gt[0] - p2 * gr[1] * pt;
    out.d_t[0] += -c2 * gr[1] - p2 * gt[0] * pr;
    out.d_t[1] += c2 * gr[0] - p2 * gt[1] * pr;
  }
  if (mr > 0.0) {
    out.d_r[0] += d_mr * gr[0] / mr;
    out.d_r[1] += d_mr * gr[1] / mr;
  }
  if (mt > 0.0) {
    out.d_t[0] += d_mt * gt[0] / mt;
    out.d_t[1] += d_mt * gt[1] / mt;
  }
  return out;
}

bool in_canvas(Vec2 p, int w, int h) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0;
}

}  // namespace

namespace {

/// Gradient loss on pre-interleaved Sobel fields; the render-field adjoint is
/// accumulated into `d_field` (same layout) for one deferred Sobel transpose.
double gradient_loss_fields(const std::vector<double>& fr, const std::vector<double>& ft, int w,
                            int h, const StampSequence& stamps, double alpha, double beta,
                            std::vector<double>* d_field, StampAdjoint* d_stamps, double scale) {
  const double L = stamps.length;
  if (!(L > 0.0)) return 0.0;
  const GridView<2> vr{fr.data(), w, h};
  const GridView<2> vt{ft.data(), w, h};
  double sum = 0.0;
  for (int k = 0; k < stamps.size(); ++k) {
    const Vec2 p = stamps.position[k];
    if (!in_canvas(p, w, h)) continue;
    double gr[2], grx[2], gry[2], gt[2], gtx[2], gty[2];
    spline_sample<2>(vr, p.x, p.y, gr, grx, gry);
    spline_sample<2>(vt, p.x, p.y, gt, gtx, gty);
    const AlignTerm a = align_term(gr, gt, alpha, beta);
    sum += a.value;
    if (d_field) {
      const double g[2] = {scale * a.d_r[0] / L, scale * a.d_r[1] / L};
      spline_scatter<2>(d_field->data(), w, h, p.x, p.y, g);
    }
    if (d_stamps) {
      const double s = scale / L;
      d_stamps->position[k].x +=
          s * (a.d_r[0] * grx[0] + a.d_r[1] * grx[1] + a.d_t[0] * gtx[0] + a.d_t[1] * gtx[1]);
      d_stamps->position[k].y +=
          s * (a.d_r[0] * gry[0] + a.d_r[1] * gry[1] + a.d_t[0] * gty[0] + a.d_t[1] * gty[1]);
    }
  }
  const double loss = sum / L;
  if (d_stamps && stamps.size() >= 2) {
    backprop_arc_lengths(stamps.position, {}, -scale * loss / L, d_stamps->position);
  }
  return loss;
}

}  // namespace

double gradient_loss(const Canvas& render, const GradientField& target_grad,
                     const StampSequence& stamps, double alpha, double beta, Canvas* d_render,
                     StampAdjoint* d_stamps, double scale) {
  const int w = render.width(), h = render.height();
  if (target_grad.width != w || target_grad.height != h) {
    throw Error("gradient_loss: target gradient dimension mismatch");
  }
  const std::vector<double> fr = interleave(sobel_gradients(render));
  const std::vector<double> ft = interleave(target_grad);
  std::vector<double> d_field;
  if (d_render) d_field.assign(fr.size(), 0.0);
  const double loss = gradient_loss_fields(fr, ft, w, h, stamps, alpha, beta,
                                           d_render ? &d_field : nullptr, d_stamps, scale);
  if (d_render) sobel_backward(d_field, w, h, *d_render);
  return loss;
}

double gradient_loss(const Canvas& render, const Canvas& target, const StampSequence& stamps,
                     double alpha, double beta) {
  require_same_size(render, target, "gradient_loss");
  return gradient_loss(render, sobel_gradients(target), stamps, alpha, beta);
}

// --- segmentation / area ------------------------------------------------------------

double seg_loss(const CoverageMask& mask, const LabelMap& labels, CoverageMask* d_mask,
                double scale) {
  if (labels.width() != mask.canvas_width || labels.height() != mask.canvas_height) {
    throw Error("seg_loss: label map dimension mismatch");
  }
  const Rect& box = mask.box;
  std::vector<double> overlap(std::max(1, labels.region_count()), 0.0);
  double area = 0.0;
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const double m = mask.at(x, y);
      overlap[labels.at(x, y)] += m;
      area += m;
    }
  }
  const int best =
      static_cast<int>(std::max_element(overlap.begin(), overlap.end()) - overlap.begin());
  const double denom = std::max(1.0, area);
  const double off = area - overlap[best];
  if (d_mask) {
    const double shared = area > 1.0 ? -off / (denom * denom) : 0.0;
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        const double g = (labels.at(x, y) != best ? 1.0 / denom : 0.0) + shared;
        d_mask->values[static_cast<std::size_t>(y - box.y0) * box.width() + (x - box.x0)] +=
            scale * g;
      }
    }
  }
  return off / denom;
}

double area_loss(std::span<const double> areas, double eta, std::span<double> d_areas,
                 double scale) {
  if (areas.empty()) throw Error("area_loss: empty stroke list");
  if (!(eta > 0.0)) throw Error("area_loss: eta must be > 0");
  const double inv = 1.0 / static_cast<double>(areas.size());
  double sum = 0.0;
  for (std::size_t s = 0; s < areas.size(); ++s) {
    const double e = std::exp(-areas[s] / eta);
    sum += e;
    if (!d_areas.empty()) d_areas[s] += -scale * inv * e / eta;
  }
  return sum * inv;
}

double area_loss(const std::vector<CoverageMask>& masks, double eta) {
  std::vector<double> areas;
  for (const auto& m : masks) areas.push_back(m.area);
  return area_loss(areas, eta);
}

// --- optimal transport ---------------------------------------------------------------

namespace {

constexpr double kMassFloor = 1e-6;

struct CellSpan {
  int begin;
  int end;
};

std::vector<CellSpan> cell_spans(int pixels, int cells) {
  std::vector<CellSpan> s(cells);
  for (int i = 0; i < cells; ++i) {
    s[i] = {static_cast<int>(static_cast<long>(i) * pixels / cells),
            static_cast<int>(static_cast<long>(i + 1) * pixels / cells)};
  }
  return s;
}

/// Gibbs kernel exp(-lambda (x_i - x_k)^2) on n cell centres in [0,1], and
/// the same kernel multiplied by the cost.
void axis_kernels(int n, double lambda, std::vector<double>& K, std::vector<double>& KC) {
  K.resize(static_cast<std::size_t>(n) * n);
  KC.resize(K.size());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double d = (i - k) / static_cast<double>(n);
      const double c = d * d;
      K[static_cast<std::size_t>(i) * n + k] = std::exp(-lambda * c);
      KC[static_cast<std::size_t>(i) * n + k] = c * std::exp(-lambda * c);
    }
  }
}

/// out = (Ay (x) Ax) v for v laid out as gh rows of gw. Both factors symmetric.
void apply_separable(const std::vector<double>& Ax, const std::vector<double>& Ay, int gw, int gh,
                     const std::vector<double>& v, std::vector<double>& out) {
  thread_local std::vector<double> tmp;
  tmp.assign(v.size(), 0.0);
  for (int j = 0; j < gh; ++j) {
    const double* vr = v.data() + static_cast<std::size_t>(j) * gw;
    for (int i = 0; i < gw; ++i) {
      const double* ar = Ax.data() + static_cast<std::size_t>(i) * gw;
      double s = 0.0;
      for (int k = 0; k < gw; ++k) s += ar[k] * vr[k];
      tmp[j * gw + i] = s;
    }
  }
  out.assign(v.size(), 0.0);
  for (int j = 0; j < gh; ++j) {
    for (int l = 0; l < gh; ++l) {
      const double a = Ay[static_cast<std::size_t>(j) * gh + l];
      for (int i = 0; i < gw; ++i) out[j * gw + i] += a * tmp[l * gw + i];
    }
  }
}

}  // namespace

OTDistribution ot_distribution(const Canvas& canvas, int grid) {
  OTDistribution d;
  d.gw = std::min(grid, canvas.width());
  d.gh = std::min(grid, canvas.height());
  const auto xs = cell_spans(canvas.width(), d.gw);
  const auto ys = cell_spans(canvas.height(), d.gh);
  d.mass.assign(static_cast<std::size_t>(d.gw) * d.gh, 0.0);
  for (int j = 0; j < d.gh; ++j) {
    for (int i = 0; i < d.gw; ++i) {
      double s = 0.0;
      for (int y = ys[j].begin; y < ys[j].end; ++y)
        for (int x = xs[i].begin; x < xs[i].end; ++x) s += luminance(canvas.pixel(x, y));
      const int count = (ys[j].end - ys[j].begin) * (xs[i].end - xs[i].begin);
      d.mass[j * d.gw + i] = s / count + kMassFloor;
    }
  }
  const double total = std::accumulate(d.mass.begin(), d.mass.end(), 0.0);
  for (double& m : d.mass) m /= total;
  return d;
}

SinkhornResult sinkhorn(const OTDistribution& source, const OTDistribution& target, double lambda,
                        int iterations, std::vector<double>* d_source) {
  if (source.gw != target.gw || source.gh != target.gh) {
    throw Error("sinkhorn: distributions live on different grids");
  }
  if (iterations < 1) throw Error("sinkhorn: iterations must be >= 1");
  const int gw = source.gw, gh = source.gh;
  const std::size_t n = source.mass.size();
  std::vector<double> Kx, KCx, Ky, KCy;
  axis_kernels(gw, lambda, Kx, KCx);
  axis_kernels(gh, lambda, Ky, KCy);
  const auto& a = source.mass;
  const auto& b = target.mass;

  // Iterates and their denominators s_t = K v_{t-1}, r_t = K u_t, kept for the
  // reverse pass.
  std::vector<std::vector<double>> us, vs, ss, rs;
  std::vector<double> u(n, 1.0), v(n, 1.0), s_t, r_t;
  for (int it = 0; it < iterations; ++it) {
    apply_separable(Kx, Ky, gw, gh, v, s_t);
    for (std::size_t i = 0; i < n; ++i) u[i] = a[i] / s_t[i];
    apply_separable(Kx, Ky, gw, gh, u, r_t);
    for (std::size_t i = 0; i < n; ++i) v[i] = b[i] / r_t[i];
    if (d_source) {
      us.push_back(u);
      vs.push_back(v);
      ss.push_back(s_t);
      rs.push_back(r_t);
    }
  }

  // <C, P> = u^T M v with M = (Ky (x) KCx) + (KCy (x) Kx).
  auto apply_cost = [&](const std::vector<double>& x, std::vector<double>& out) {
    std::vector<double> t2;
    apply_separable(KCx, Ky, gw, gh, x, out);
    apply_separable(Kx, KCy, gw, gh, x, t2);
    for (std::size_t i = 0; i < n; ++i) out[i] += t2[i];
  };
  SinkhornResult res;
  std::vector<double> Mv;
  apply_cost(v, Mv);
  for (std::size_t i = 0; i < n; ++i) res.loss += u[i] * Mv[i];

  std::vector<double> Kv, Ku;
  apply_separable(Kx, Ky, gw, gh, v, Kv);
  apply_separable(Kx, Ky, gw, gh, u, Ku);
  res.row_marginal.resize(n);
  res.col_marginal.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.row_marginal[i] = u[i] * Kv[i];
    res.col_marginal[i] = v[i] * Ku[i];
  }

  if (d_source) {
    d_source->resize(n, 0.0);
    std::vector<double> du = Mv, dv, s_adj(n), r_adj(n), t2;
    apply_cost(u, dv);
    for (int it = iterations - 1; it >= 0; --it) {
      const auto& ut = us[it];
      const auto& vt = vs[it];
      const auto& r_val = rs[it];
      const auto& s_val = ss[it];
      // v = b / r with r = K u
      for (std::size_t i = 0; i < n; ++i) r_adj[i] = -dv[i] * vt[i] / r_val[i];
      apply_separable(Kx, Ky, gw, gh, r_adj, t2);
      for (std::size_t i = 0; i < n; ++i) du[i] += t2[i];
      // u = a / s with s = K v_prev
      for (std::size_t i = 0; i < n; ++i) {
        (*d_source)[i] += du[i] / s_val[i];
        s_adj[i] = -du[i] * ut[i] / s_val[i];
      }
      if (it > 0) {
        apply_separable(Kx, Ky, gw, gh, s_adj, dv);
      } else {
        std::fill(dv.begin(), dv.end(), 0.0);
      }
      std::fill(du.begin(), du.end(), 0.0);
    }
  }
  return res;
}

namespace {

/// Pulls a distribution adjoint back through normalization and box
/// downsampling into an image adjoint.
void ot_distribution_backward(const Canvas& canvas, const OTDistribution& dist,
                              const std::vector<double>& d_mass, double scale,
                              Canvas& d_render) {
  double raw_total = 0.0;
  const auto xs = cell_spans(canvas.width(), dist.gw);
  const auto ys = cell_spans(canvas.height(), dist.gh);
  // The normalized mass is raw / Z; recover Z from any cell's pixel mean.
  std::vector<double> raw(dist.mass.size());
  for (int j = 0; j < dist.gh; ++j) {
    for (int i = 0; i < dist.gw; ++i) {
      double s = 0.0;
      for (int y = ys[j].begin; y < ys[j].end; ++y)
        for (int x = xs[i].begin; x < xs[i].end; ++x) s += luminance(canvas.pixel(x, y));
      const int count = (ys[j].end - ys[j].begin) * (xs[i].end - xs[i].begin);
      raw[j * dist.gw + i] = s / count + kMassFloor;
    }
  }
  raw_total = std::accumulate(raw.begin(), raw.end(), 0.0);
  double dot = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) dot += d_mass[i] * dist.mass[i];
  const double lw[3] = {0.299, 0.587, 0.114};
  for (int j = 0; j < dist.gh; ++j) {
    for (int i = 0; i < dist.gw; ++i) {
      const double d_raw = (d_mass[j * dist.gw + i] - dot) / raw_total;
      const int count = (ys[j].end - ys[j].begin) * (xs[i].end - xs[i].begin);
      const double d_lum = scale * d_raw / count;
      for (int y = ys[j].begin; y < ys[j].end; ++y)
        for (int x = xs[i].begin; x < xs[i].end; ++x)
          for (int c = 0; c < 3; ++c) d_render.at(x, y, c) += lw[c] * d_lum;
    }
  }
}

double ot_with_target(const Canvas& render, const OTDistribution& target, const OTConfig& cfg,
                      Canvas* d_render, double scale) {
  const OTDistribution src = ot_distribution(render, cfg.grid);
  std::vector<double> d_mass;
  const SinkhornResult r =
      sinkhorn(src, target, cfg.lambda, cfg.iterations, d_render ? &d_mass : nullptr);
  if (d_render) ot_distribution_backward(render, src, d_mass, scale, *d_render);
  return r.loss;
}

}  // namespace

double sinkhorn_ot(const Canvas& render, const Canvas& target, const OTConfig& cfg,
                   Canvas* d_render, double scale) {
  validate(cfg);
  require_same_size(render, target, "sinkhorn_ot");
  return ot_with_target(render, ot_distribution(target, cfg.grid), cfg, d_render, scale);
}

// --- combined ---------------------------------------------------------------------------

AppearanceLoss::AppearanceLoss(const Canvas& target, const LabelMap* labels,
                               const LossWeights& weights, const OTConfig& ot,
                               const FeatureExtractorHook* hook)
    : target_(target), labels_(labels), weights_(weights), ot_(ot), hook_(hook) {
  validate(weights_);
  validate(ot_);
  if (labels_ && (labels_->width() != target.width() || labels_->height() != target.height())) {
    throw Error("appearance loss: label map dimension mismatch");
  }
  target_field_ = interleave(sobel_gradients(target_));
  target_ot_ = ot_distribution(target_, ot_.grid);
}

LossBreakdown AppearanceLoss::evaluate(const Canvas& render,
                                       const std::vector<StrokeTerms>& strokes,
                                       LossGradient* grad) const {
  require_same_size(render, target_, "appearance loss");
  const LossWeights& w = weights_;
  LossBreakdown out;
  Canvas* d_render = nullptr;
  if (grad) {
    grad->d_render = Canvas(render.width(), render.height());
    d_render = &grad->d_render;
    grad->d_masks.clear();
    grad->d_stamps.clear();
    for (const auto& s : strokes) {
      CoverageMask dm = *s.mask;
      std::fill(dm.values.begin(), dm.values.end(), 0.0);
      dm.area = 0.0;
      grad->d_masks.push_back(std::move(dm));
      grad->d_stamps.push_back(StampAdjoint::zeros(s.stamps->size(), false));
    }
  }

  if (w.pixel > 0.0) out.pixel = pixel_loss(render, target_, d_render, w.pixel);
  if (w.perc > 0.0) out.perc = perceptual_loss(render, target_, hook_, d_render, w.perc);

  const double inv_strokes = strokes.empty() ? 0.0 : 1.0 / static_cast<double>(strokes.size());
  if (w.grad > 0.0 && !strokes.empty()) {
    const int W = render.width(), H = render.height();
    const std::vector<double> fr = interleave(sobel_gradients(render));
    std::vector<double> d_field;
    if (grad) d_field.assign(fr.size(), 0.0);
    for (std::size_t s = 0; s < strokes.size(); ++s) {
      out.grad += gradient_loss_fields(fr, target_field_, W, H, *strokes[s].stamps, w.grad_alpha,
                                       w.grad_beta, grad ? &d_field : nullptr,
                                       grad ? &grad->d_stamps[s] : nullptr, w.grad * inv_strokes);
    }
    out.grad *= inv_strokes;
    if (grad) sobel_backward(d_field, W, H, *d_render);
  }
  if (w.seg > 0.0 && labels_ && !strokes.empty()) {
    for (std::size_t s = 0; s < strokes.size(); ++s) {
      out.seg += seg_loss(*strokes[s].mask, *labels_, grad ? &grad->d_masks[s] : nullptr,
                          w.seg * inv_strokes);
    }
    out.seg *= inv_strokes;
  }
  if (w.ot > 0.0) out.ot = ot_with_target(render, target_ot_, ot_, d_render, w.ot);
  if (w.area > 0.0 && !strokes.empty()) {
    std::vector<double> areas, d_areas(strokes.size(), 0.0);
    for (const auto& s : strokes) areas.push_back(s.mask->area);
    out.area = area_loss(areas, w.eta, grad ? std::span<double>(d_areas) : std::span<double>{},
                         w.area);
    if (grad) {
      for (std::size_t s = 0; s < strokes.size(); ++s)
        for (double& v : grad->d_masks[s].values) v += d_areas[s];
    }
  }
  out.total = w.pixel * out.pixel + w.perc * out.perc + w.grad * out.grad + w.seg * out.seg +
              w.ot * out.ot + w.area * out.area;
  return out;
}

LossBreakdown total_app_loss(const Canvas& render, const Canvas& target,
                             const std::vector<StrokeTerms>& strokes, const LabelMap* labels,
                             const LossWeights& weights, const OTConfig& ot,
                             const FeatureExtractorHook* hook) {
  return AppearanceLoss(target, labels, weights, ot, hook).evaluate(render, strokes);
}

double style_loss(const Canvas& render, const Canvas& target,
                  const std::vector<StrokeTerms>& strokes, const LossWeights& weights,
                  const FeatureExtractorHook* hook) {
  return AppearanceLoss(target, nullptr, weights.style_only(), OTConfig{}, hook)
      .evaluate(render, strokes)
      .total;
}

}  // namespace brushrecon
