#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "brushrecon/image.hpp"

namespace brushrecon {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// Quadratic Bezier trajectory plus linearly interpolated radius.
struct StrokeGeometry {
  Vec2 start;
  Vec2 control;
  Vec2 end;
  double r_start = 1.0;
  double r_end = 1.0;
  friend bool operator==(const StrokeGeometry&, const StrokeGeometry&) = default;
};

inline constexpr int kTextureDim = 8;
using TextureVector = std::array<double, kTextureDim>;

struct PaintStroke {
  StrokeGeometry geometry;
  Rgb c_start;
  Rgb c_end;
  double alpha = 1.0;
  TextureVector w{};
  friend bool operator==(const PaintStroke&, const PaintStroke&) = default;
};

struct SmudgeStroke {
  StrokeGeometry geometry;
  friend bool operator==(const SmudgeStroke&, const SmudgeStroke&) = default;
};

/// N+1 stamps sampled at t_k = k/N. `color` is empty for smudge strokes.
struct StampSequence {
  std::vector<double> t;
  std::vector<Vec2> position;
  std::vector<double> radius;
  std::vector<Rgb> color;
  std::vector<double> arc;  // cumulative polyline length, arc[0] == 0
  double length = 0.0;

  int size() const { return static_cast<int>(position.size()); }
  /// N, the number of segments.
  int segments() const { return size() - 1; }
};

struct ArcLengths {
  std::vector<double> cumulative;
  double total = 0.0;
};

Vec2 bezier_point(const StrokeGeometry& g, double t);

ArcLengths arc_lengths(std::span<const Vec2> points);

/// ell_i / L, or i/N for a degenerate (zero-length) polyline.
std::vector<double> normalized_arc_positions(const ArcLengths& arcs);

StampSequence sample_stamps(const StrokeGeometry& g, int n);
StampSequence sample_stamps(const PaintStroke& s, int n);
StampSequence sample_stamps(const SmudgeStroke& s, int n);

bool is_valid(const StrokeGeometry& g);
bool is_valid(const PaintStroke& s);

/// Translates all control points by `offset`.
StrokeGeometry translated(const StrokeGeometry& g, Vec2 offset);

/// Adjoints with respect to the sampled stamps of one stroke.
struct StampAdjoint {
  std::vector<Vec2> position;
  std::vector<double> radius;
  std::vector<Rgb> color;  // empty when colours are not differentiated

  static StampAdjoint zeros(int count, bool with_color);
};

/// Chains stamp adjoints back to stroke slots (see diff.hpp for the layout).
/// `d_slots` holds 8 geometry slots, or 15 when colour adjoints are present.
void backprop_stamps(const StampSequence& stamps, const StampAdjoint& adj,
                     std::span<double> d_slots);

/// Adjoint of arc_lengths: accumulates into `d_points`.
void backprop_arc_lengths(std::span<const Vec2> points, std::span<const double> d_cumulative,
                          double d_total, std::span<Vec2> d_points);

}  // namespace brushrecon
