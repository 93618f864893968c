#include "brushrecon/geometry.hpp"

#include <string>

namespace brushrecon {

Vec2 bezier_point(const StrokeGeometry& g, double t) {
  const double u = 1.0 - t;
  return {u * u * g.start.x + 2.0 * t * u * g.control.x + t * t * g.end.x,
          u * u * g.start.y + 2.0 * t * u * g.control.y + t * t * g.end.y};
}

ArcLengths arc_lengths(std::span<const Vec2> points) {
  if (points.size() < 2) {
    throw Error("arc_lengths: need at least 2 points, got " + std::to_string(points.size()));
  }
  ArcLengths out;
  out.cumulative.resize(points.size());
  out.cumulative[0] = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    out.cumulative[k] = out.cumulative[k - 1] + norm(points[k] - points[k - 1]);
  }
  out.total = out.cumulative.back();
  return out;
}

std::vector<double> normalized_arc_positions(const ArcLengths& arcs) {
  const std::size_t n = arcs.cumulative.size();
  std::vector<double> t(n);
  if (arcs.total <= 0.0) {
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
  }
  for (std::size_t i = 0; i < n; ++i) t[i] = arcs.cumulative[i] / arcs.total;
  t.back() = 1.0;
  return t;
}

StampSequence sample_stamps(const StrokeGeometry& g, int n) {
  if (n < 1) throw Error("sample_stamps: N must be >= 1");
  StampSequence s;
  s.t.resize(n + 1);
  s.position.resize(n + 1);
  s.radius.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    s.t[k] = t;
    s.position[k] = bezier_point(g, t);
    s.radius[k] = (1.0 - t) * g.r_start + t * g.r_end;
  }
  // Endpoints are exact, independent of rounding in the Bernstein form.
  s.position.front() = g.start;
  s.position.back() = g.end;
  ArcLengths arcs = arc_lengths(s.position);
  s.arc = std::move(arcs.cumulative);
  s.length = arcs.total;
  return s;
}

StampSequence sample_stamps(const PaintStroke& stroke, int n) {
  StampSequence s = sample_stamps(stroke.geometry, n);
  s.color.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = s.t[k];
    s.color[k] = (1.0 - t) * stroke.c_start + t * stroke.c_end;
  }
  s.color.front() = stroke.c_start;
  s.color.back() = stroke.c_end;
  return s;
}

StampSequence sample_stamps(const SmudgeStroke& stroke, int n) {
  return sample_stamps(stroke.geometry, n);
}

bool is_valid(const StrokeGeometry& g) {
  const double coords[] = {g.start.x, g.start.y, g.control.x, g.control.y, g.end.x, g.end.y};
  for (double c : coords)
    if (!std::isfinite(c)) return false;
  return g.r_start > 0.0 && g.r_end > 0.0 && std::isfinite(g.r_start) && std::isfinite(g.r_end);
}

bool is_valid(const PaintStroke& s) {
  if (!is_valid(s.geometry)) return false;
  for (int c = 0; c < 3; ++c) {
    if (!(s.c_start[c] >= 0.0 && s.c_start[c] <= 1.0)) return false;
    if (!(s.c_end[c] >= 0.0 && s.c_end[c] <= 1.0)) return false;
  }
  return s.alpha > 0.0 && s.alpha <= 1.0;
}

StrokeGeometry translated(const StrokeGeometry& g, Vec2 offset) {
  StrokeGeometry out = g;
  out.start = g.start + offset;
  out.control = g.control + offset;
  out.end = g.end + offset;
  return out;
}


StampAdjoint StampAdjoint::zeros(int count, bool with_color) {
  StampAdjoint a;
  a.position.assign(count, Vec2{});
  a.radius.assign(count, 0.0);
  if (with_color) a.color.assign(count, Rgb{});
  return a;
}

void backprop_stamps(const StampSequence& stamps, const StampAdjoint& adj,
                     std::span<double> d) {
  for (int k = 0; k < stamps.size(); ++k) {
    const double t = stamps.t[k];
    const double u = 1.0 - t;
    const double ws = u * u;
    const double wc = 2.0 * t * u;
    const double we = t * t;
    const Vec2 gp = adj.position[k];
    d[0] += ws * gp.x;
    d[1] += ws * gp.y;
    d[2] += wc * gp.x;
    d[3] += wc * gp.y;
    d[4] += we * gp.x;
    d[5] += we * gp.y;
    d[6] += u * adj.radius[k];
    d[7] += t * adj.radius[k];
    if (!adj.color.empty()) {
      for (int c = 0; c < 3; ++c) {
        d[8 + c] += u * adj.color[k][c];
        d[11 + c] += t * adj.color[k][c];
      }
    }
  }
}

void backprop_arc_lengths(std::span<const Vec2> points, std::span<const double> d_cumulative,
                          double d_total, std::span<Vec2> d_points) {
  const std::size_t n = points.size();
  double suffix = d_total;
  for (std::size_t j = n - 1; j >= 1; --j) {
    suffix += d_cumulative.empty() ? 0.0 : d_cumulative[j];
    const Vec2 seg = points[j] - points[j - 1];
    const double len = norm(seg);
    if (len > 0.0) {
      const Vec2 g = (suffix / len) * seg;
      d_points[j] = d_points[j] + g;
      d_points[j - 1] = d_points[j - 1] - g;
    }
  }
}

}  // namespace brushrecon
