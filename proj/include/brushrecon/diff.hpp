#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "brushrecon/geometry.hpp"

namespace brushrecon {

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Flat named parameter list.
struct ParamVector {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

// Slot layouts. Geometry occupies the first eight slots of both kinds.
inline constexpr int kGeometrySlots = 8;
inline constexpr int kPaintSlots = 15;
inline constexpr int kSmudgeSlots = kGeometrySlots;

enum PaintSlot : int {
  kStartX, kStartY, kControlX, kControlY, kEndX, kEndY, kRadiusStart, kRadiusEnd,
  kColorStartR, kColorStartG, kColorStartB, kColorEndR, kColorEndG, kColorEndB, kAlpha
};

const std::array<std::string, kPaintSlots>& paint_slot_names();

ParamVector to_params(const PaintStroke& s);
ParamVector to_params(const SmudgeStroke& s);
void write_geometry(const StrokeGeometry& g, std::span<double> slots);
StrokeGeometry read_geometry(std::span<const double> slots);
void write_paint(const PaintStroke& s, std::span<double> slots);
/// Overwrites the 15 appearance slots of `s`; `w` is left untouched.
void read_paint(std::span<const double> slots, PaintStroke& s);

/// A scalar objective together with its gradient.
struct DifferentiableFunction {
  std::function<double(std::span<const double>)> value;
  /// Returns the value and writes the gradient into the second argument.
  std::function<double(std::span<const double>, std::span<double>)> value_and_gradient;
};

std::vector<double> gradient_of(const DifferentiableFunction& f, std::span<const double> params);

struct GradReport {
  std::vector<std::string> names;
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> abs_error;
  std::vector<double> rel_error;
  double max_rel_error = 0.0;
};

double relative_error(double analytic, double numeric);

/// Central differences on every slot, compared against the analytic gradient.
GradReport gradcheck(const DifferentiableFunction& f, const ParamVector& params, double eps = 1e-4);

}  // namespace brushrecon
