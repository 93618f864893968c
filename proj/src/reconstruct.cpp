#include "brushrecon/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace brushrecon {

void validate(const PhaseConfig& cfg) {
  if (cfg.levels < 1) throw Error("levels must be >= 1");
  if (cfg.total_strokes < 1) throw Error("strokes must be >= 1");
  if (cfg.paint_iterations < 1 || cfg.texture_iterations < 1 || cfg.smudge_iterations < 1) {
    throw Error("iteration counts must be >= 1");
  }
  if (!(cfg.init_alpha > 0.0 && cfg.init_alpha <= 1.0)) throw Error("init_alpha must be in (0, 1]");
  if (!(cfg.radius_min > 0.0 && cfg.radius_min <= cfg.radius_max)) {
    throw Error("radius bounds must satisfy 0 < radius_min <= radius_max");
  }
  if (!(cfg.paint_lr > 0.0 && cfg.smudge_lr > 0.0 && cfg.texture_peak_lr > 0.0)) {
    throw Error("learning rates must be positive");
  }
  validate(cfg.render);
  validate(cfg.smudge);
  validate(cfg.weights);
  validate(cfg.ot);
  if (cfg.texture == TextureMode::kExternal && cfg.texture_dir.empty()) {
    throw Error("external texture mode needs a texture directory");
  }
}

int paint_strokes_per_cell(const PhaseConfig& cfg, int level) {
  return std::max(1, cfg.total_strokes / cfg.levels / (level * level));
}

int smudge_strokes_per_cell(const PhaseConfig& cfg, int level) {
  if (level >= cfg.levels) return 0;
  const int total = cfg.smudge_strokes < 0 ? cfg.total_strokes / 4 : cfg.smudge_strokes;
  if (total <= 0) return 0;
  return std::max(1, total / (cfg.levels - 1) / (level * level));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Vec2 clamp_to(Vec2 p, const Rect& r) {
  return {std::clamp(p.x, static_cast<double>(r.x0), static_cast<double>(r.x1 - 1)),
          std::clamp(p.y, static_cast<double>(r.y0), static_cast<double>(r.y1 - 1))};
}

}  // namespace

std::mt19937_64 cell_rng(std::uint64_t seed, int level, int cell, int phase) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(level));
  h = splitmix64(h ^ static_cast<std::uint64_t>(cell));
  h = splitmix64(h ^ static_cast<std::uint64_t>(phase));
  return std::mt19937_64(h);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<Vec2> sample_error_points(const ScalarField& error, const Rect& cell, int count,
                                      std::mt19937_64& rng) {
  if (cell.empty()) throw Error("sample_error_points: empty cell");
  const int cw = cell.width();
  std::vector<double> cdf;
  cdf.reserve(static_cast<std::size_t>(cw) * cell.height());
  double acc = 0.0;
  for (int y = cell.y0; y < cell.y1; ++y) {
    for (int x = cell.x0; x < cell.x1; ++x) {
      acc += std::max(0.0, error.at(x, y));
      cdf.push_back(acc);
    }
  }
  std::vector<Vec2> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::size_t k;
    if (acc > 0.0) {
      const double u = uniform01(rng) * acc;
      k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      k = std::min(k, cdf.size() - 1);
    } else {
      k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cdf.size()));
    }
    out.push_back({static_cast<double>(cell.x0 + static_cast<int>(k % cw)),
                   static_cast<double>(cell.y0 + static_cast<int>(k / cw))});
  }
  return out;
}

double initial_radius(const Rect& cell, double r_min, double r_max) {
  return std::clamp(std::hypot(cell.width(), cell.height()) / 8.0, r_min, r_max);
}

std::vector<PaintStroke> init_strokes(const ScalarField& error, const Canvas& target,
                                      const Rect& cell, int count, double r_min, double r_max,
                                      double alpha, std::mt19937_64& rng) {
  const double r = initial_radius(cell, r_min, r_max);
  const auto starts = sample_error_points(error, cell, count, rng);
  std::vector<PaintStroke> out;
  out.reserve(count);
  for (const Vec2 p : starts) {
    const double theta = 2.0 * std::numbers::pi * uniform01(rng);
    const double len = 2.0 * r * uniform01(rng);
    const Vec2 e = clamp_to(p + len * Vec2{std::cos(theta), std::sin(theta)}, cell);
    const Vec2 jitter{(uniform01(rng) - 0.5) * r, (uniform01(rng) - 0.5) * r};
    const Vec2 c = clamp_to(0.5 * (p + e) + jitter, cell);
    PaintStroke s;
    s.geometry = {p, c, e, r, r};
    const Rgb col = target.pixel(static_cast<int>(p.x), static_cast<int>(p.y));
    s.c_start = col;
    s.c_end = col;
    s.alpha = alpha;
    out.push_back(s);
  }
  return out;
}

std::vector<SmudgeStroke> init_smudge_strokes(const ScalarField& error, const Canvas& target,
                                              const Rect& cell, int count, double r_min,
                                              double r_max, std::mt19937_64& rng) {
  const double r = initial_radius(cell, r_min, r_max);
  const GradientField grad = sobel_gradients(target);
  const auto starts = sample_error_points(error, cell, count, rng);
  std::vector<SmudgeStroke> out;
  out.reserve(count);
  for (const Vec2 p : starts) {
    const std::size_t i =
        static_cast<std::size_t>(p.y) * grad.width + static_cast<std::size_t>(p.x);
    Vec2 dir{-grad.gy[i], grad.gx[i]};
    const double n = norm(dir);
    const double theta = 2.0 * std::numbers::pi * uniform01(rng);
    dir = n > 0.0 ? (1.0 / n) * dir : Vec2{std::cos(theta), std::sin(theta)};
    const Vec2 e = clamp_to(p + 2.0 * r * dir, cell);
    const Vec2 jitter{(uniform01(rng) - 0.5) * 0.25 * r, (uniform01(rng) - 0.5) * 0.25 * r};
    const Vec2 c = clamp_to(0.5 * (p + e) + jitter, cell);
    out.push_back({{p, c, e, r, r}});
  }
  return out;
}

// --- objectives ------------------------------------------------------------------

namespace {

std::vector<StrokeTerms> terms_of(const std::vector<CoverageMask>& masks,
                                  const std::vector<StampSequence>& stamps) {
  std::vector<StrokeTerms> terms;
  terms.reserve(masks.size());
  for (std::size_t j = 0; j < masks.size(); ++j) terms.push_back({&masks[j], &stamps[j]});
  return terms;
}

template <class Obj>
DifferentiableFunction make_function(const Obj* obj) {
  return {[obj](std::span<const double> p) { return obj->evaluate(p).total; },
          [obj](std::span<const double> p, std::span<double> g) {
            return obj->evaluate(p, g).total;
          }};
}

void check_size(std::span<const double> params, std::size_t dim, const char* what) {
  if (params.size() != dim) throw Error(std::string(what) + ": parameter size mismatch");
}

}  // namespace

PaintObjective::PaintObjective(const AppearanceLoss& loss, Canvas base, RenderConfig cfg,
                               std::vector<PaintStroke> templates)
    : loss_(&loss), base_(std::move(base)), cfg_(cfg), templates_(std::move(templates)) {}

std::vector<double> PaintObjective::pack(const std::vector<PaintStroke>& strokes) const {
  std::vector<double> out(strokes.size() * kPaintSlots);
  for (std::size_t j = 0; j < strokes.size(); ++j) {
    write_paint(strokes[j], std::span<double>(out).subspan(j * kPaintSlots, kPaintSlots));
  }
  return out;
}

std::vector<PaintStroke> PaintObjective::unpack(std::span<const double> params) const {
  check_size(params, dimension(), "PaintObjective");
  std::vector<PaintStroke> out = templates_;
  for (std::size_t j = 0; j < out.size(); ++j) {
    read_paint(params.subspan(j * kPaintSlots, kPaintSlots), out[j]);
  }
  return out;
}

Canvas PaintObjective::render(std::span<const double> params) const {
  Canvas c = base_;
  for (const auto& s : unpack(params)) c = render_paint_soft(s, c, cfg_).canvas;
  return c;
}

LossBreakdown PaintObjective::evaluate(std::span<const double> params,
                                       std::span<double> grad) const {
  const auto strokes = unpack(params);
  const std::size_t m = strokes.size();
  std::vector<Canvas> canvases;
  canvases.reserve(m + 1);
  canvases.push_back(base_);
  std::vector<CoverageMask> masks;
  std::vector<StampSequence> stamps;
  for (const auto& s : strokes) {
    SoftPaintResult r = render_paint_soft(s, canvases.back(), cfg_);
    canvases.push_back(std::move(r.canvas));
    masks.push_back(std::move(r.mask));
    stamps.push_back(sample_stamps(s.geometry, cfg_.stamps));
  }
  const auto terms = terms_of(masks, stamps);
  if (grad.empty()) return loss_->evaluate(canvases.back(), terms);
  check_size(grad, dimension(), "PaintObjective gradient");
  LossGradient lg;
  const LossBreakdown out = loss_->evaluate(canvases.back(), terms, &lg);
  Canvas d = std::move(lg.d_render);
  for (std::size_t j = m; j-- > 0;) {
    const auto g = render_paint_soft_backward(strokes[j], canvases[j], cfg_, nullptr, d,
                                              {&lg.d_masks[j], &lg.d_stamps[j], nullptr});
    std::copy(g.begin(), g.end(), grad.begin() + static_cast<std::ptrdiff_t>(j * kPaintSlots));
  }
  return out;
}

DifferentiableFunction PaintObjective::function() const { return make_function(this); }

SmudgeObjective::SmudgeObjective(const AppearanceLoss& loss, Canvas base, SmudgeParams params,
                                 RenderConfig mask_cfg, std::size_t count)
    : loss_(&loss), base_(std::move(base)), params_(params), mask_cfg_(mask_cfg), count_(count) {}

std::vector<double> SmudgeObjective::pack(const std::vector<SmudgeStroke>& strokes) const {
  std::vector<double> out(strokes.size() * kSmudgeSlots);
  for (std::size_t j = 0; j < strokes.size(); ++j) {
    write_geometry(strokes[j].geometry,
                   std::span<double>(out).subspan(j * kSmudgeSlots, kSmudgeSlots));
  }
  return out;
}

std::vector<SmudgeStroke> SmudgeObjective::unpack(std::span<const double> params) const {
  check_size(params, dimension(), "SmudgeObjective");
  std::vector<SmudgeStroke> out(count_);
  for (std::size_t j = 0; j < count_; ++j) {
    out[j].geometry = read_geometry(params.subspan(j * kSmudgeSlots, kSmudgeSlots));
  }
  return out;
}

Canvas SmudgeObjective::render(std::span<const double> params) const {
  Canvas c = base_;
  for (const auto& s : unpack(params)) smudge_oneshot_inplace(c, s, params_);
  return c;
}

LossBreakdown SmudgeObjective::evaluate(std::span<const double> params,
                                        std::span<double> grad) const {
  const auto strokes = unpack(params);
  std::vector<Canvas> canvases;
  canvases.reserve(count_ + 1);
  canvases.push_back(base_);
  std::vector<CoverageMask> masks;
  std::vector<StampSequence> stamps;
  for (const auto& s : strokes) {
    canvases.push_back(smudge_oneshot(s, canvases.back(), params_));
    masks.push_back(stroke_mask(s.geometry, mask_cfg_, base_.width(), base_.height()));
    stamps.push_back(sample_stamps(s.geometry, mask_cfg_.stamps));
  }
  const auto terms = terms_of(masks, stamps);
  if (grad.empty()) return loss_->evaluate(canvases.back(), terms);
  check_size(grad, dimension(), "SmudgeObjective gradient");
  LossGradient lg;
  const LossBreakdown out = loss_->evaluate(canvases.back(), terms, &lg);
  Canvas d = std::move(lg.d_render);
  for (std::size_t j = count_; j-- > 0;) {
    const auto gs = smudge_oneshot_backward(strokes[j], canvases[j], params_, d);
    const auto gm = stroke_mask_backward(strokes[j].geometry, mask_cfg_, lg.d_masks[j],
                                         &lg.d_stamps[j]);
    for (int k = 0; k < kSmudgeSlots; ++k) grad[j * kSmudgeSlots + k] = gs[k] + gm[k];
  }
  return out;
}

DifferentiableFunction SmudgeObjective::function() const { return make_function(this); }

TextureObjective::TextureObjective(const AppearanceLoss& loss, Canvas base, RenderConfig cfg,
                                   std::vector<PaintStroke> strokes, Vec2 origin)
    : loss_(&loss), base_(std::move(base)), cfg_(cfg), strokes_(std::move(strokes)),
      origin_(origin) {}

std::vector<double> TextureObjective::pack(const std::vector<PaintStroke>& strokes) const {
  std::vector<double> out;
  out.reserve(strokes.size() * 2);
  for (const auto& s : strokes) {
    out.push_back(s.w[0]);
    out.push_back(s.w[1]);
  }
  return out;
}

std::vector<PaintStroke> TextureObjective::unpack(std::span<const double> params) const {
  check_size(params, dimension(), "TextureObjective");
  std::vector<PaintStroke> out = strokes_;
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j].w[0] = params[2 * j];
    out[j].w[1] = params[2 * j + 1];
  }
  return out;
}

LossBreakdown TextureObjective::evaluate(std::span<const double> params,
                                         std::span<double> grad) const {
  const auto strokes = unpack(params);
  const int W = base_.width(), H = base_.height();
  std::vector<Canvas> canvases;
  canvases.reserve(strokes.size() + 1);
  canvases.push_back(base_);
  std::vector<Canvas> mods;
  std::vector<CoverageMask> masks;
  std::vector<StampSequence> stamps;
  for (const auto& s : strokes) {
    mods.push_back(procedural_texture(s, W, H, cfg_, origin_));
    SoftPaintResult r = render_paint_soft(s, canvases.back(), cfg_, &mods.back());
    canvases.push_back(std::move(r.canvas));
    masks.push_back(std::move(r.mask));
    stamps.push_back(sample_stamps(s.geometry, cfg_.stamps));
  }
  const auto terms = terms_of(masks, stamps);
  if (grad.empty()) return loss_->evaluate(canvases.back(), terms);
  check_size(grad, dimension(), "TextureObjective gradient");
  LossGradient lg;
  const LossBreakdown out = loss_->evaluate(canvases.back(), terms, &lg);
  Canvas d = std::move(lg.d_render);
  for (std::size_t j = strokes.size(); j-- > 0;) {
    Canvas d_mod(W, H);
    render_paint_soft_backward(strokes[j], canvases[j], cfg_, &mods[j], d,
                               {nullptr, nullptr, &d_mod});
    const auto gw = procedural_texture_backward(strokes[j], d_mod, cfg_, origin_);
    grad[2 * j] = gw[0];
    grad[2 * j + 1] = gw[1];
  }
  return out;
}

DifferentiableFunction TextureObjective::function() const { return make_function(this); }

// --- phases ----------------------------------------------------------------------

namespace {

using Projection = std::function<void(std::vector<double>&)>;

/// Minimizes `f` in coordinates divided by `unit`, keeping the best iterate.
template <class Optimizer, class LrFn>
std::vector<double> minimize(const DifferentiableFunction& f, std::vector<double> x,
                             const std::vector<double>& unit, const Projection& project,
                             int iterations, Optimizer opt, LrFn lr_at, PhaseTrace* trace) {
  const std::size_t n = x.size();
  project(x);
  std::vector<double> g(n), z(n), gz(n);
  std::vector<double> best = x;
  double best_value = std::numeric_limits<double>::infinity();
  if (trace) trace->losses.clear();
  auto record = [&](double v) {
    if (trace) trace->losses.push_back(v);
    if (v < best_value) {
      best_value = v;
      best = x;
    }
  };
  for (int it = 0; it < iterations; ++it) {
    const double v = f.value_and_gradient(x, g);
    if (!std::isfinite(v)) break;
    record(v);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = x[i] / unit[i];
      gz[i] = g[i] * unit[i];
    }
    opt.lr = lr_at(it);
    try {
      opt.step(z, gz);
    } catch (const NonFiniteError&) {
      break;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = z[i] * unit[i];
    project(x);
  }
  const double v = f.value(x);
  if (std::isfinite(v)) record(v);
  if (trace) trace->best = best_value;
  return best;
}

void project_geometry(std::span<double> s, double w, double h, double r_min, double r_max) {
  for (int k = 0; k < 6; k += 2) {
    s[k] = std::clamp(s[k], -0.25 * w, 1.25 * w);
    s[k + 1] = std::clamp(s[k + 1], -0.25 * h, 1.25 * h);
  }
  s[kRadiusStart] = std::clamp(s[kRadiusStart], r_min, r_max);
  s[kRadiusEnd] = std::clamp(s[kRadiusEnd], r_min, r_max);
}

double window_scale(const Canvas& c) { return std::max(c.width(), c.height()); }

}  // namespace

std::vector<PaintStroke> optimize_paint_phase(const WindowProblem& problem,
                                              std::vector<PaintStroke> init,
                                              const PhaseConfig& cfg,
                                              const FeatureExtractorHook* hook,
                                              PhaseTrace* trace) {
  if (init.empty()) return init;
  const AppearanceLoss loss(*problem.target, problem.labels, cfg.weights, cfg.ot, hook);
  const PaintObjective obj(loss, problem.canvas, cfg.render, init);
  const double S = window_scale(problem.canvas);
  const double W = problem.canvas.width(), H = problem.canvas.height();
  const double r_max = std::min(cfg.radius_max, S);
  const double r_min = std::min(cfg.radius_min, r_max);
  std::vector<double> unit(obj.dimension(), 1.0);
  for (std::size_t j = 0; j < init.size(); ++j)
    for (int k = 0; k < kGeometrySlots; ++k) unit[j * kPaintSlots + k] = S;
  const Projection project = [&](std::vector<double>& x) {
    for (std::size_t j = 0; j < init.size(); ++j) {
      std::span<double> s(x.data() + j * kPaintSlots, kPaintSlots);
      project_geometry(s, W, H, r_min, r_max);
      for (int k = kColorStartR; k <= kColorEndB; ++k) s[k] = std::clamp(s[k], 0.0, 1.0);
      s[kAlpha] = std::clamp(s[kAlpha], 0.05, 1.0);
    }
  };
  RmsProp opt;
  const double lr = cfg.paint_lr;
  const auto best = minimize(obj.function(), obj.pack(init), unit, project,
                             cfg.paint_iterations, opt, [lr](int) { return lr; }, trace);
  return obj.unpack(best);
}

std::vector<PaintStroke> optimize_texture_phase(const WindowProblem& problem,
                                                std::vector<PaintStroke> strokes,
                                                const PhaseConfig& cfg,
                                                const FeatureExtractorHook* hook,
                                                PhaseTrace* trace) {
  if (cfg.texture != TextureMode::kProcedural || strokes.empty()) {
    return strokes;
  }
  const AppearanceLoss loss(*problem.target, nullptr, cfg.weights.style_only(), cfg.ot, hook);
  const TextureObjective obj(loss, problem.canvas, cfg.render, strokes, problem.origin);
  const std::vector<double> unit(obj.dimension(), 1.0);
  const Projection project = [](std::vector<double>& x) {
    for (double& v : x) v = std::clamp(v, -8.0, 8.0);
  };
  Schedule sched;
  sched.total_steps = cfg.texture_iterations;
  sched.peak_lr = cfg.texture_peak_lr;
  Adam opt;
  const auto best =
      minimize(obj.function(), obj.pack(strokes), unit, project, cfg.texture_iterations, opt,
               [&sched](int it) { return lr_schedule(sched, it); }, trace);
  return obj.unpack(best);
}

std::vector<SmudgeStroke> optimize_smudge_phase(const WindowProblem& problem,
                                                std::vector<SmudgeStroke> init,
                                                const PhaseConfig& cfg,
                                                const FeatureExtractorHook* hook,
                                                PhaseTrace* trace) {
  if (init.empty()) return init;
  const AppearanceLoss loss(*problem.target, problem.labels, cfg.weights.smudge_phase(), cfg.ot,
                            hook);
  const RenderConfig mask_cfg{cfg.smudge.stamps, cfg.smudge.tau, cfg.render.gamma};
  const SmudgeObjective obj(loss, problem.canvas, cfg.smudge, mask_cfg, init.size());
  const double S = window_scale(problem.canvas);
  const double W = problem.canvas.width(), H = problem.canvas.height();
  const double r_max = std::min(cfg.radius_max, S);
  const double r_min = std::min(cfg.radius_min, r_max);
  const std::vector<double> unit(obj.dimension(), S);
  const Projection project = [&](std::vector<double>& x) {
    for (std::size_t j = 0; j < init.size(); ++j) {
      project_geometry(std::span<double>(x.data() + j * kSmudgeSlots, kSmudgeSlots), W, H, r_min,
                       r_max);
    }
  };
  RmsProp opt;
  const double lr = cfg.smudge_lr;
  const auto best = minimize(obj.function(), obj.pack(init), unit, project,
                             cfg.smudge_iterations, opt, [lr](int) { return lr; }, trace);
  return obj.unpack(best);
}

// --- controller --------------------------------------------------------------------

Timeline empty_timeline(int width, int height, const PhaseConfig& cfg) {
  Timeline t;
  t.width = width;
  t.height = height;
  t.background = cfg.background;
  t.render = cfg.render;
  t.smudge = cfg.smudge;
  t.texture = {cfg.texture, cfg.texture_dir};
  return t;
}

namespace {

enum PhaseId : int { kPhasePaint = 0, kPhaseSmudge = 1 };

/// Events rendered onto a copy of `base`; indices continue from `first_index`.
Canvas commit(const Canvas& base, Vec2 origin, const std::vector<TimelineEvent>& events,
              std::size_t first_index, const Timeline& settings) {
  Canvas c = base;
  for (std::size_t j = 0; j < events.size(); ++j) {
    apply_event_local(c, origin, events[j], first_index + j, settings);
  }
  return c;
}

}  // namespace

ReconstructResult reconstruct(const Canvas& target, const LabelMap* labels,
                              const PhaseConfig& cfg, const FeatureExtractorHook* hook,
                              const std::function<void(const std::string&)>& log) {
  validate(cfg);
  if (labels && (labels->width() != target.width() || labels->height() != target.height())) {
    throw Error("label map size does not match the target");
  }
  const int W = target.width(), H = target.height();
  ReconstructResult res;
  res.timeline = empty_timeline(W, H, cfg);
  res.canvas = Canvas(W, H, cfg.background);
  res.report.initial_pixel_loss = pixel_loss(res.canvas, target);
  Timeline& tl = res.timeline;

  for (int level = 1; level <= cfg.levels; ++level) {
    const auto cells = partition_grid(W, H, level);
    const int n_paint = paint_strokes_per_cell(cfg, level);
    const int n_smudge = smudge_strokes_per_cell(cfg, level);
    for (int ci = 0; ci < static_cast<int>(cells.size()); ++ci) {
      const Rect win = cells[ci];
      if (win.empty()) continue;
      const Vec2 origin{static_cast<double>(win.x0), static_cast<double>(win.y0)};
      const Rect local{0, 0, win.width(), win.height()};
      const Canvas target_w = crop(target, win);
      std::optional<LabelMap> labels_w;
      if (labels) labels_w = labels->crop(win);
      CellReport cell_report{level, ci, 0, 0, false};

      WindowProblem problem{&target_w, labels_w ? &*labels_w : nullptr, crop(res.canvas, win),
                            origin};
      const Canvas before = problem.canvas;
      const double loss_before = pixel_loss(before, target_w);
      const std::size_t first = tl.events.size();

      // Phase I: paint.
      auto rng = cell_rng(cfg.seed, level, ci, kPhasePaint);
      auto strokes =
          init_strokes(error_map(before, target_w), target_w, local, n_paint, cfg.radius_min,
                       cfg.radius_max, cfg.init_alpha, rng);
      strokes = optimize_paint_phase(problem, strokes, cfg, hook);
      std::vector<TimelineEvent> events;
      for (const auto& s : strokes) {
        TimelineEvent e;
        e.phase = StrokePhase::kPaint;
        e.level = level;
        e.cell = ci;
        e.paint = s;
        e.paint.geometry = translated(s.geometry, origin);
        events.push_back(e);
      }
      Canvas committed = commit(before, origin, events, first, tl);
      double loss_now = pixel_loss(committed, target_w);
      if (loss_now > loss_before) {
        events.clear();
        committed = before;
        loss_now = loss_before;
      }

      // Phase II: texture, re-rendered from the pre-paint state.
      if (!events.empty() && cfg.texture != TextureMode::kNone) {
        const auto textured = optimize_texture_phase(problem, strokes, cfg, hook);
        std::vector<TimelineEvent> tex_events = events;
        for (std::size_t j = 0; j < tex_events.size(); ++j) {
          tex_events[j].texture = cfg.texture;
          tex_events[j].paint.w = textured[j].w;
        }
        Canvas tex_canvas = commit(before, origin, tex_events, first, tl);
        const double tex_loss = pixel_loss(tex_canvas, target_w);
        if (tex_loss <= loss_now) {
          events = std::move(tex_events);
          committed = std::move(tex_canvas);
          loss_now = tex_loss;
          cell_report.textured = true;
        }
      }
      cell_report.paint_kept = static_cast<int>(events.size());
      tl.events.insert(tl.events.end(), events.begin(), events.end());

      // Phase III: smudge.
      if (n_smudge > 0) {
        auto srng = cell_rng(cfg.seed, level, ci, kPhaseSmudge);
        auto smudges = init_smudge_strokes(error_map(committed, target_w), target_w, local,
                                           n_smudge, cfg.radius_min, cfg.radius_max, srng);
        problem.canvas = committed;
        smudges = optimize_smudge_phase(problem, smudges, cfg, hook);
        std::vector<TimelineEvent> sm_events;
        for (const auto& s : smudges) {
          TimelineEvent e;
          e.phase = StrokePhase::kSmudge;
          e.level = level;
          e.cell = ci;
          e.smudge.geometry = translated(s.geometry, origin);
          sm_events.push_back(e);
        }
        Canvas sm_canvas = commit(committed, origin, sm_events, tl.events.size(), tl);
        const double sm_loss = pixel_loss(sm_canvas, target_w);
        if (sm_loss <= loss_now) {
          committed = std::move(sm_canvas);
          loss_now = sm_loss;
          cell_report.smudge_kept = static_cast<int>(sm_events.size());
          tl.events.insert(tl.events.end(), sm_events.begin(), sm_events.end());
        }
      }

      paste(res.canvas, committed, win);
      res.report.cells.push_back(cell_report);
      if (log) {
        std::ostringstream os;
        os << "level " << level << " cell " << ci << ": paint " << cell_report.paint_kept
           << (cell_report.textured ? " (textured)" : "") << ", smudge "
           << cell_report.smudge_kept << ", L1 " << loss_before << " -> " << loss_now;
        log(os.str());
      }
    }
    res.report.level_pixel_loss.push_back(pixel_loss(res.canvas, target));
  }
  return res;
}

}  // namespace brushrecon
