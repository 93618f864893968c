#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "brushrecon/diff.hpp"
#include "brushrecon/losses.hpp"
#include "brushrecon/optim.hpp"
#include "brushrecon/paint.hpp"
#include "brushrecon/smudge.hpp"
#include "brushrecon/texture.hpp"
#include "brushrecon/timeline.hpp"

namespace brushrecon {

struct PhaseConfig {
  int levels = 2;             // n_max
  int total_strokes = 64;     // paint budget over all levels
  int smudge_strokes = -1;    // smudge budget over all levels; negative: total_strokes / 4
  int paint_iterations = 300;
  int texture_iterations = 100;
  int smudge_iterations = 200;
  RenderConfig render;
  SmudgeParams smudge;
  LossWeights weights;
  OTConfig ot;
  TextureMode texture = TextureMode::kProcedural;
  std::filesystem::path texture_dir;
  std::uint64_t seed = 1;
  Rgb background{1.0, 1.0, 1.0};
  double init_alpha = 0.8;
  double radius_min = 1.0;
  double radius_max = 256.0;
  double paint_lr = 0.003;
  double smudge_lr = 0.003;
  double texture_peak_lr = 0.01;
};

void validate(const PhaseConfig& cfg);

int paint_strokes_per_cell(const PhaseConfig& cfg, int level);
/// Zero at the final level.
int smudge_strokes_per_cell(const PhaseConfig& cfg, int level);

/// Independent generator for one (level, cell, phase) of a run.
std::mt19937_64 cell_rng(std::uint64_t seed, int level, int cell, int phase);

/// Uniform double in [0, 1) from 53 random bits.
double uniform01(std::mt19937_64& rng);

/// Pixel positions drawn with probability proportional to `error` inside
/// `cell` (uniform when the cell's error sums to zero).
std::vector<Vec2> sample_error_points(const ScalarField& error, const Rect& cell, int count,
                                      std::mt19937_64& rng);

double initial_radius(const Rect& cell, double r_min, double r_max);

std::vector<PaintStroke> init_strokes(const ScalarField& error, const Canvas& target,
                                      const Rect& cell, int count, double r_min, double r_max,
                                      double alpha, std::mt19937_64& rng);

/// Smudge strokes starting at error-weighted points and running along the
/// target's local isophote.
std::vector<SmudgeStroke> init_smudge_strokes(const ScalarField& error, const Canvas& target,
                                              const Rect& cell, int count, double r_min,
                                              double r_max, std::mt19937_64& rng);

// --- objectives over one window --------------------------------------------------

/// Soft-rendered paint strokes composited in order over `base`, scored by an
/// appearance loss. Parameters are 15 slots per stroke in pixel units.
class PaintObjective {
 public:
  PaintObjective(const AppearanceLoss& loss, Canvas base, RenderConfig cfg,
                 std::vector<PaintStroke> templates);

  std::size_t dimension() const { return templates_.size() * kPaintSlots; }
  std::vector<double> pack(const std::vector<PaintStroke>& strokes) const;
  std::vector<PaintStroke> unpack(std::span<const double> params) const;
  Canvas render(std::span<const double> params) const;
  /// Loss at `params`; writes the gradient when `grad` is non-empty.
  LossBreakdown evaluate(std::span<const double> params, std::span<double> grad = {}) const;
  DifferentiableFunction function() const;

 private:
  const AppearanceLoss* loss_;
  Canvas base_;
  RenderConfig cfg_;
  std::vector<PaintStroke> templates_;
};

/// One-shot smudge strokes applied in order over `base`. 8 slots per stroke.
class SmudgeObjective {
 public:
  SmudgeObjective(const AppearanceLoss& loss, Canvas base, SmudgeParams params,
                  RenderConfig mask_cfg, std::size_t count);

  std::size_t dimension() const { return count_ * kSmudgeSlots; }
  std::vector<double> pack(const std::vector<SmudgeStroke>& strokes) const;
  std::vector<SmudgeStroke> unpack(std::span<const double> params) const;
  Canvas render(std::span<const double> params) const;
  LossBreakdown evaluate(std::span<const double> params, std::span<double> grad = {}) const;
  DifferentiableFunction function() const;

 private:
  const AppearanceLoss* loss_;
  Canvas base_;
  SmudgeParams params_;
  RenderConfig mask_cfg_;
  std::size_t count_;
};

/// Procedurally textured strokes with frozen appearance; parameters are
/// (w[0], w[1]) per stroke.
class TextureObjective {
 public:
  TextureObjective(const AppearanceLoss& loss, Canvas base, RenderConfig cfg,
                   std::vector<PaintStroke> strokes, Vec2 origin);

  std::size_t dimension() const { return strokes_.size() * 2; }
  std::vector<double> pack(const std::vector<PaintStroke>& strokes) const;
  std::vector<PaintStroke> unpack(std::span<const double> params) const;
  LossBreakdown evaluate(std::span<const double> params, std::span<double> grad = {}) const;
  DifferentiableFunction function() const;

 private:
  const AppearanceLoss* loss_;
  Canvas base_;
  RenderConfig cfg_;
  std::vector<PaintStroke> strokes_;
  Vec2 origin_;
};

// --- phases ----------------------------------------------------------------------

struct PhaseTrace {
  std::vector<double> losses;  // objective per evaluated iterate
  double best = 0.0;
};

/// Everything one window optimization needs; all images are window crops.
struct WindowProblem {
  const Canvas* target = nullptr;
  const LabelMap* labels = nullptr;  // optional
  Canvas canvas;                     // current canvas state of the window
  Vec2 origin;                       // window offset in the full canvas
};

/// RMSprop on appearance slots (positions and radii normalized by the window
/// size), projected to the valid set after each step. Returns the
/// best-snapshot strokes in window coordinates.
std::vector<PaintStroke> optimize_paint_phase(const WindowProblem& problem,
                                              std::vector<PaintStroke> init,
                                              const PhaseConfig& cfg,
                                              const FeatureExtractorHook* hook = nullptr,
                                              PhaseTrace* trace = nullptr);

/// Adam with the warm-up/plateau/cosine schedule on w[0], w[1] under the
/// style loss. Geometry, colours and alpha are returned untouched. A no-op
/// unless the texture mode is procedural.
std::vector<PaintStroke> optimize_texture_phase(const WindowProblem& problem,
                                                std::vector<PaintStroke> strokes,
                                                const PhaseConfig& cfg,
                                                const FeatureExtractorHook* hook = nullptr,
                                                PhaseTrace* trace = nullptr);

std::vector<SmudgeStroke> optimize_smudge_phase(const WindowProblem& problem,
                                                std::vector<SmudgeStroke> init,
                                                const PhaseConfig& cfg,
                                                const FeatureExtractorHook* hook = nullptr,
                                                PhaseTrace* trace = nullptr);

// --- controller --------------------------------------------------------------------

struct CellReport {
  int level = 0;
  int cell = 0;
  int paint_kept = 0;
  int smudge_kept = 0;
  bool textured = false;
};

struct ReconstructReport {
  double initial_pixel_loss = 0.0;
  std::vector<double> level_pixel_loss;  // full canvas, after each level
  std::vector<CellReport> cells;
};

struct ReconstructResult {
  Timeline timeline;
  Canvas canvas;
  ReconstructReport report;
};

Timeline empty_timeline(int width, int height, const PhaseConfig& cfg);

/// Coarse-to-fine paint / texture / smudge loop; the final level paints only.
ReconstructResult reconstruct(const Canvas& target, const LabelMap* labels,
                              const PhaseConfig& cfg, const FeatureExtractorHook* hook = nullptr,
                              const std::function<void(const std::string&)>& log = {});

}  // namespace brushrecon
