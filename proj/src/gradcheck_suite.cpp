#include "brushrecon/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "brushrecon/diff.hpp"
#include "brushrecon/losses.hpp"
#include "brushrecon/paint.hpp"
#include "brushrecon/reconstruct.hpp"
#include "brushrecon/smudge.hpp"
#include "brushrecon/texture.hpp"

namespace brushrecon {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Colours strictly inside (0, 1) so that |render - target| never vanishes
/// against a {0, 1} target.
Canvas noise_canvas(std::mt19937_64& rng, int w, int h, double lo = 0.05, double hi = 0.95) {
  Canvas c(w, h);
  for (double& v : c.data()) v = uniform(rng, lo, hi);
  return c;
}

Canvas binary_canvas(std::mt19937_64& rng, int w, int h) {
  Canvas c(w, h);
  for (double& v : c.data()) v = uniform01(rng) < 0.5 ? 0.0 : 1.0;
  return c;
}

StrokeGeometry random_geometry(std::mt19937_64& rng, int w, int h) {
  const double m = 3.0;
  auto pt = [&] { return Vec2{uniform(rng, m, w - 1 - m), uniform(rng, m, h - 1 - m)}; };
  return {pt(), pt(), pt(), uniform(rng, 2.5, 6.0), uniform(rng, 2.5, 6.0)};
}

Rgb random_rgb(std::mt19937_64& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

PaintStroke random_paint(std::mt19937_64& rng, int w, int h, double c_lo = 0.05,
                         double c_hi = 0.95) {
  PaintStroke s;
  s.geometry = random_geometry(rng, w, h);
  s.c_start = random_rgb(rng, c_lo, c_hi);
  s.c_end = random_rgb(rng, c_lo, c_hi);
  s.alpha = uniform(rng, 0.2, 0.95);
  return s;
}

ParamVector geometry_params(const StrokeGeometry& g) { return to_params(SmudgeStroke{g}); }

struct Case {
  DifferentiableFunction f;
  ParamVector params;
};

using Builder = std::function<Case(std::mt19937_64&, const GradcheckOptions&)>;

RenderConfig paint_config(const GradcheckOptions& o) { return {10, o.tau, 2.0}; }

Case paint_case(std::mt19937_64& rng, const GradcheckOptions& o) {
  struct State {
    Canvas canvas, target;
    RenderConfig cfg;
    PaintStroke stroke;
  };
  const int n = o.canvas;
  auto st = std::make_shared<State>(
      State{noise_canvas(rng, n, n), binary_canvas(rng, n, n), paint_config(o), {}});
  st->stroke = random_paint(rng, n, n);
  Case c;
  c.params = to_params(st->stroke);
  c.f.value = [st](std::span<const double> p) {
    PaintStroke s = st->stroke;
    read_paint(p, s);
    return pixel_loss(render_paint_soft(s, st->canvas, st->cfg).canvas, st->target);
  };
  c.f.value_and_gradient = [st](std::span<const double> p, std::span<double> g) {
    PaintStroke s = st->stroke;
    read_paint(p, s);
    const auto r = render_paint_soft(s, st->canvas, st->cfg);
    Canvas d(r.canvas.width(), r.canvas.height());
    const double v = pixel_loss(r.canvas, st->target, &d);
    const auto a = render_paint_soft_backward(s, st->canvas, st->cfg, nullptr, d);
    std::copy(a.begin(), a.end(), g.begin());
    return v;
  };
  return c;
}

Case smudge_case(std::mt19937_64& rng, const GradcheckOptions& o) {
  struct State {
    Canvas canvas, target;
    SmudgeParams params;
  };
  const int n = o.canvas;
  SmudgeParams sp;
  sp.alpha_c = uniform(rng, 0.2, 0.8);
  sp.alpha_s = uniform(rng, 0.1, 0.6);
  sp.a = uniform(rng, 1.0, 3.0);
  sp.b = uniform(rng, 1.0, 3.0);
  sp.stamps = 8;
  sp.patch_res = 16;
  sp.tau = o.tau;
  auto st = std::make_shared<State>(State{noise_canvas(rng, n, n), binary_canvas(rng, n, n), sp});
  const SmudgeStroke stroke{random_geometry(rng, n, n)};
  Case c;
  c.params = to_params(stroke);
  c.f.value = [st](std::span<const double> p) {
    const SmudgeStroke s{read_geometry(p)};
    return pixel_loss(smudge_oneshot(s, st->canvas, st->params), st->target);
  };
  c.f.value_and_gradient = [st](std::span<const double> p, std::span<double> g) {
    const SmudgeStroke s{read_geometry(p)};
    const Canvas out = smudge_oneshot(s, st->canvas, st->params);
    Canvas d(out.width(), out.height());
    const double v = pixel_loss(out, st->target, &d);
    const auto a = smudge_oneshot_backward(s, st->canvas, st->params, d);
    std::copy(a.begin(), a.end(), g.begin());
    return v;
  };
  return c;
}

Case gradient_loss_case(std::mt19937_64& rng, const GradcheckOptions& o) {
  struct State {
    Canvas canvas;
    GradientField target;
    RenderConfig cfg;
    PaintStroke stroke;
    double alpha, beta;
  };
  const int n = o.canvas;
  auto st = std::make_shared<State>(State{noise_canvas(rng, n, n),
                                          sobel_gradients(noise_canvas(rng, n, n)),
                                          paint_config(o),
                                          random_paint(rng, n, n),
                                          uniform(rng, 0.5, 2.0),
                                          uniform(rng, 0.5, 2.0)});
  Case c;
  c.params = to_params(st->stroke);
  c.f.value = [st](std::span<const double> p) {
    PaintStroke s = st->stroke;
    read_paint(p, s);
    const Canvas r = render_paint_soft(s, st->canvas, st->cfg).canvas;
    return gradient_loss(r, st->target, sample_stamps(s.geometry, st->cfg.stamps), st->alpha,
                         st->beta);
  };
  c.f.value_and_gradient = [st](std::span<const double> p, std::span<double> g) {
    PaintStroke s = st->stroke;
    read_paint(p, s);
    const Canvas r = render_paint_soft(s, st->canvas, st->cfg).canvas;
    const StampSequence stamps = sample_stamps(s.geometry, st->cfg.stamps);
    Canvas d(r.width(), r.height());
    StampAdjoint ds = StampAdjoint::zeros(stamps.size(), false);
    const double v = gradient_loss(r, st->target, stamps, st->alpha, st->beta, &d, &ds);
    const auto a =
        render_paint_soft_backward(s, st->canvas, st->cfg, nullptr, d, {nullptr, &ds, nullptr});
    std::copy(a.begin(), a.end(), g.begin());
    return v;
  };
  return c;
}

/// Regions from a random straight cut, plus an optional second cut.
LabelMap random_labels(std::mt19937_64& rng, int w, int h) {
  const double theta = uniform(rng, 0.0, 3.14159265358979);
  const Vec2 nrm{std::cos(theta), std::sin(theta)};
  const double off = uniform(rng, 0.3, 0.7) * (w + h) * 0.5;
  const bool second = uniform01(rng) < 0.5;
  const double off2 = uniform(rng, 0.2, 0.8) * w;
  std::vector<int> ids(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int id = dot(nrm, Vec2{double(x), double(y)}) > off ? 1 : 0;
      if (second && x > off2) id += 2;
      ids[static_cast<std::size_t>(y) * w + x] = id;
    }
  }
  return LabelMap(w, h, std::move(ids));
}

Case seg_case(std::mt19937_64& rng, const GradcheckOptions& o) {
  struct State {
    LabelMap labels;
    RenderConfig cfg;
    int n;
  };
  const int n = o.canvas;
  auto st = std::make_shared<State>(State{random_labels(rng, n, n), paint_config(o), n});
  Case c;
  c.params = geometry_params(random_geometry(rng, n, n));
  c.f.value = [st](std::span<const double> p) {
    return seg_loss(stroke_mask(read_geometry(p), st->cfg, st->n, st->n), st->labels);
  };
  c.f.value_and_gradient = [st](std::span<const double> p, std::span<double> g) {
    const StrokeGeometry geo = read_geometry(p);
    const CoverageMask m = stroke_mask(geo, st->cfg, st->n, st->n);
    CoverageMask d = m;
    std::fill(d.values.begin(), d.values.end(), 0.0);
    const double v = seg_loss(m, st->labels, &d);
    const auto a = stroke_mask_backward(geo, st->cfg, d);
    std::copy(a.begin(), a.end(), g.begin());
    return v;
  };
  return c;
}

Case area_case(std::mt19937_64& rng, const GradcheckOptions& o) {
  struct State {
    RenderConfig cfg;
    int n;
    double eta;
  };
  const int n = o.canvas;
  auto st = std::make_shared<State>(State{paint_config(o), n, uniform(rng, 50.0, 200.0)});
  Case c;
  c.params = geometry_params(random_geometry(rng, n, n));
  c.f.value = [st](std::span<const double> p) {
    return area_loss({stroke_mask(read_geometry(p), st->cfg, st->n, st->n)}, st->eta);
  };
  c.f.value_and_gradient = [st](std::span<const double> p, std::span<double> g) {
    const StrokeGeometry geo = read_geometry(p);
    const CoverageMask m = stroke_mask(geo, st->cfg, st->n, st->n);
    const double areas[1] = {m.area};
    double d_area[1] = {0.0};
    const double v = area_loss(areas, st->eta, d_area);
    CoverageMask d = m;
    std::fill(d.values.begin(), d.values.end(), d_area[0]);
    const auto a = stroke_mask_backward(geo, st->cfg, d);
    std::copy(a.begin(), a.end(), g.begin());
    return v;
  };
  return c;
}

Case ot_case(std::mt19937_64& rng, const GradcheckOptions& o) {
  struct State {
    Canvas canvas, target;
    RenderConfig cfg;
    OTConfig ot;
    PaintStroke stroke;
  };
  const int n = o.canvas;
  auto st = std::make_shared<State>(State{noise_canvas(rng, n, n), noise_canvas(rng, n, n, 0.0, 1.0),
                                          paint_config(o), OTConfig{16, 10.0, 100},
                                          random_paint(rng, n, n)});
  Case c;
  c.params = to_params(st->stroke);
  c.f.value = [st](std::span<const double> p) {
    PaintStroke s = st->stroke;
    read_paint(p, s);
    return sinkhorn_ot(render_paint_soft(s, st->canvas, st->cfg).canvas, st->target, st->ot);
  };
  c.f.value_and_gradient = [st](std::span<const double> p, std::span<double> g) {
    PaintStroke s = st->stroke;
    read_paint(p, s);
    const Canvas r = render_paint_soft(s, st->canvas, st->cfg).canvas;
    Canvas d(r.width(), r.height());
    const double v = sinkhorn_ot(r, st->target, st->ot, &d);
    const auto a = render_paint_soft_backward(s, st->canvas, st->cfg, nullptr, d);
    std::copy(a.begin(), a.end(), g.begin());
    return v;
  };
  return c;
}

Case texture_case(std::mt19937_64& rng, const GradcheckOptions& o) {
  struct State {
    AppearanceLoss loss;
    TextureObjective objective;
    State(const Canvas& target, const Canvas& canvas, const RenderConfig& cfg,
          const PaintStroke& stroke, Vec2 origin)
        : loss(target, nullptr, LossWeights{}.style_only(), OTConfig{}, nullptr),
          objective(loss, canvas, cfg, {stroke}, origin) {}
  };
  const int n = o.canvas;
  // Colours at most 0.6 keep colour times modulation (<= 1.5) below the clamp.
  const Canvas canvas = noise_canvas(rng, n, n);
  const Canvas target = binary_canvas(rng, n, n);
  PaintStroke stroke = random_paint(rng, n, n, 0.05, 0.6);
  stroke.w[0] = uniform(rng, -2.0, 2.0);
  stroke.w[1] = uniform(rng, -2.0, 2.0);
  const Vec2 origin{std::floor(uniform(rng, 0.0, 200.0)), std::floor(uniform(rng, 0.0, 200.0))};
  auto st = std::make_shared<State>(target, canvas, paint_config(o), stroke, origin);
  Case c;
  c.params.names = {"w0", "w1"};
  c.params.values = st->objective.pack({stroke});
  c.f.value = [st](std::span<const double> p) { return st->objective.evaluate(p).total; };
  c.f.value_and_gradient = [st](std::span<const double> p, std::span<double> g) {
    return st->objective.evaluate(p, g).total;
  };
  return c;
}

struct Component {
  const char* name;
  Builder build;
};

const std::vector<Component>& components() {
  static const std::vector<Component> all = {
      {"paint_soft_pixel", paint_case},       {"smudge_oneshot_pixel", smudge_case},
      {"gradient_loss", gradient_loss_case},  {"seg_loss", seg_case},
      {"area_loss", area_case},               {"ot_loss", ot_case},
      {"texture_style_loss", texture_case}};
  return all;
}

}  // namespace

std::vector<std::string> gradcheck_component_names() {
  std::vector<std::string> out;
  for (const auto& c : components()) out.emplace_back(c.name);
  return out;
}

GradcheckSuiteReport run_gradcheck_suite(const GradcheckOptions& opt,
                                         const std::vector<std::string>& only) {
  if (opt.configs < 1) throw Error("gradcheck: configs must be >= 1");
  if (opt.canvas < 12) throw Error("gradcheck: canvas must be >= 12");
  if (!(opt.tau > 0.0)) throw Error("gradcheck: tau must be > 0");
  GradcheckSuiteReport report;
  report.passed = true;
  for (std::size_t ci = 0; ci < components().size(); ++ci) {
    const Component& comp = components()[ci];
    if (!only.empty() && std::find(only.begin(), only.end(), comp.name) == only.end()) continue;
    std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ull + ci);
    ComponentReport cr;
    cr.name = comp.name;
    for (int k = 0; k < opt.configs; ++k) {
      const Case c = comp.build(rng, opt);
      cr.slots = static_cast<int>(c.params.size());
      double err;
      std::string slot;
      try {
        const GradReport g = gradcheck(c.f, c.params, opt.eps);
        err = g.max_rel_error;
        const auto it = std::max_element(g.rel_error.begin(), g.rel_error.end());
        slot = g.names[static_cast<std::size_t>(it - g.rel_error.begin())];
      } catch (const NonFiniteError& e) {
        err = std::numeric_limits<double>::infinity();
        slot = e.what();
      }
      ++cr.configs;
      if (cr.worst_config < 0 || err > cr.max_rel_error) {
        cr.max_rel_error = err;
        cr.worst_config = k;
        cr.worst_slot = slot;
      }
    }
    cr.passed = cr.max_rel_error <= opt.tolerance;
    report.passed = report.passed && cr.passed;
    report.components.push_back(cr);
  }
  return report;
}

std::string format_report(const GradcheckSuiteReport& r, double tolerance) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "component" << std::right << std::setw(9) << "configs"
     << std::setw(7) << "slots" << std::setw(15) << "max_rel_err" << "  worst\n";
  for (const auto& c : r.components) {
    os << std::left << std::setw(24) << c.name << std::right << std::setw(9) << c.configs
       << std::setw(7) << c.slots << std::setw(15) << std::scientific << std::setprecision(3)
       << c.max_rel_error << std::defaultfloat << "  config " << c.worst_config << " slot "
       << c.worst_slot << (c.passed ? "" : "  FAIL") << "\n";
  }
  os << "tolerance " << tolerance << ": " << (r.passed ? "all components pass" : "FAILED")
     << "\n";
  return os.str();
}

}  // namespace brushrecon
