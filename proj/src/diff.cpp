#include "brushrecon/diff.hpp"

#include <algorithm>
#include <cmath>

namespace brushrecon {

const std::array<std::string, kPaintSlots>& paint_slot_names() {
  static const std::array<std::string, kPaintSlots> names = {
      "x_s.x", "x_s.y", "x_c.x", "x_c.y", "x_e.x", "x_e.y", "r_s",  "r_e",
      "c_s.r", "c_s.g", "c_s.b", "c_e.r", "c_e.g", "c_e.b", "alpha"};
  return names;
}

void write_geometry(const StrokeGeometry& g, std::span<double> s) {
  s[kStartX] = g.start.x;
  s[kStartY] = g.start.y;
  s[kControlX] = g.control.x;
  s[kControlY] = g.control.y;
  s[kEndX] = g.end.x;
  s[kEndY] = g.end.y;
  s[kRadiusStart] = g.r_start;
  s[kRadiusEnd] = g.r_end;
}

StrokeGeometry read_geometry(std::span<const double> s) {
  return {{s[kStartX], s[kStartY]},
          {s[kControlX], s[kControlY]},
          {s[kEndX], s[kEndY]},
          s[kRadiusStart],
          s[kRadiusEnd]};
}

void write_paint(const PaintStroke& p, std::span<double> s) {
  write_geometry(p.geometry, s);
  for (int c = 0; c < 3; ++c) {
    s[kColorStartR + c] = p.c_start[c];
    s[kColorEndR + c] = p.c_end[c];
  }
  s[kAlpha] = p.alpha;
}

void read_paint(std::span<const double> s, PaintStroke& p) {
  p.geometry = read_geometry(s);
  for (int c = 0; c < 3; ++c) {
    p.c_start[c] = s[kColorStartR + c];
    p.c_end[c] = s[kColorEndR + c];
  }
  p.alpha = s[kAlpha];
}

ParamVector to_params(const PaintStroke& s) {
  ParamVector p;
  p.names.assign(paint_slot_names().begin(), paint_slot_names().end());
  p.values.resize(kPaintSlots);
  write_paint(s, p.values);
  return p;
}

ParamVector to_params(const SmudgeStroke& s) {
  ParamVector p;
  p.names.assign(paint_slot_names().begin(), paint_slot_names().begin() + kSmudgeSlots);
  p.values.resize(kSmudgeSlots);
  write_geometry(s.geometry, p.values);
  return p;
}

std::vector<double> gradient_of(const DifferentiableFunction& f, std::span<const double> params) {
  std::vector<double> grad(params.size(), 0.0);
  const double v = f.value_and_gradient(params, grad);
  if (!std::isfinite(v)) throw NonFiniteError("gradient_of: objective is not finite");
  for (double g : grad)
    if (!std::isfinite(g)) throw NonFiniteError("gradient_of: gradient is not finite");
  return grad;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradReport gradcheck(const DifferentiableFunction& f, const ParamVector& params, double eps) {
  if (!(eps > 0.0)) throw Error("gradcheck: eps must be positive");
  const std::size_t n = params.size();
  GradReport r;
  r.names = params.names;
  r.names.resize(n);
  r.analytic = gradient_of(f, params.values);
  r.numeric.assign(n, 0.0);
  r.abs_error.assign(n, 0.0);
  r.rel_error.assign(n, 0.0);

  std::vector<int> bad(n, 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> probe = params.values;
    probe[i] = params.values[i] + eps;
    const double fp = f.value(probe);
    probe[i] = params.values[i] - eps;
    const double fm = f.value(probe);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      bad[i] = 1;
      continue;
    }
    r.numeric[i] = (fp - fm) / (2.0 * eps);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (bad[i]) {
      throw NonFiniteError("gradcheck: objective not finite when probing slot " +
                           (r.names[i].empty() ? std::to_string(i) : r.names[i]));
    }
    r.abs_error[i] = std::abs(r.analytic[i] - r.numeric[i]);
    r.rel_error[i] = relative_error(r.analytic[i], r.numeric[i]);
    r.max_rel_error = std::max(r.max_rel_error, r.rel_error[i]);
  }
  return r;
}

}  // namespace brushrecon
