#pragma once

#include <functional>
#include <vector>

#include "brushrecon/geometry.hpp"
#include "brushrecon/image.hpp"
#include "brushrecon/paint.hpp"

namespace brushrecon {

struct LossWeights {
  double pixel = 1.0;
  double perc = 0.1;
  double grad = 0.1;
  double seg = 0.1;
  double ot = 0.2;
  double area = 0.02;
  double grad_alpha = 1.0;  // magnitude term of the gradient loss
  double grad_beta = 1.0;   // orientation term of the gradient loss
  double eta = 100.0;       // area scale, pixels^2
  // Smudge-phase multipliers on grad_alpha and area.
  double smudge_grad_alpha_scale = 5.0;
  double smudge_area_scale = 5.0;

  /// The weights used while optimizing smudge strokes.
  LossWeights smudge_phase() const;
  /// Pixel, perceptual and gradient terms only.
  LossWeights style_only() const;
};

void validate(const LossWeights& w);

struct OTConfig {
  int grid = 32;
  double lambda = 10.0;
  int iterations = 100;
};

void validate(const OTConfig& c);

using FeatureMaps = std::vector<std::vector<double>>;

/// Optional perceptual feature extractor. `backward` maps feature adjoints to
/// an image adjoint (accumulated into the last argument).
struct FeatureExtractorHook {
  std::function<FeatureMaps(const Canvas&)> extract;
  std::function<void(const Canvas&, const FeatureMaps&, Canvas&)> backward;

  explicit operator bool() const { return static_cast<bool>(extract); }
};

// --- component losses ---------------------------------------------------------
// Each optional adjoint output is accumulated (+=) scaled by `scale`.

/// Mean absolute difference over pixels and channels.
double pixel_loss(const Canvas& render, const Canvas& target, Canvas* d_render = nullptr,
                  double scale = 1.0);

/// Sum over layers of the mean absolute feature difference; 0 without a hook.
double perceptual_loss(const Canvas& render, const Canvas& target,
                       const FeatureExtractorHook* hook, Canvas* d_render = nullptr,
                       double scale = 1.0);

/// Smooth |x|: x^2 / sqrt(x^2 + delta^2).
inline constexpr double kSmoothAbsDelta = 1e-2;
double smooth_abs(double x);
double smooth_abs_derivative(double x);

/// Per-stamp gradient alignment summed over in-canvas stamps and divided by
/// the stamps' arc length (0 when it vanishes). Sobel fields are sampled with
/// the cubic B-spline.
double gradient_loss(const Canvas& render, const Canvas& target, const StampSequence& stamps,
                     double alpha, double beta);
double gradient_loss(const Canvas& render, const GradientField& target_grad,
                     const StampSequence& stamps, double alpha, double beta,
                     Canvas* d_render = nullptr, StampAdjoint* d_stamps = nullptr,
                     double scale = 1.0);

/// Off-region mask mass divided by max(1, mask area).
double seg_loss(const CoverageMask& mask, const LabelMap& labels, CoverageMask* d_mask = nullptr,
                double scale = 1.0);

/// Mean of exp(-area / eta) over the masks. `d_areas` receives per-mask
/// adjoints of the areas (scaled, accumulated) when non-null.
double area_loss(std::span<const double> areas, double eta, std::span<double> d_areas = {},
                 double scale = 1.0);
double area_loss(const std::vector<CoverageMask>& masks, double eta);

// --- optimal transport -------------------------------------------------------

/// Normalized G x G luminance distribution (box downsampled, 1e-6 floor).
/// The grid is clamped to the image dimensions.
struct OTDistribution {
  int gw = 0;
  int gh = 0;
  std::vector<double> mass;  // gh rows of gw, sums to 1
};

OTDistribution ot_distribution(const Canvas& canvas, int grid);

struct SinkhornResult {
  double loss = 0.0;
  std::vector<double> row_marginal;  // sum_j P_ij
  std::vector<double> col_marginal;  // sum_i P_ij
};

/// Entropic OT between two distributions on the same grid. Cost is squared
/// distance between cell centres in [0,1]^2. When `d_source` is non-null the
/// exact gradient of <C, P> with respect to the source mass is accumulated.
SinkhornResult sinkhorn(const OTDistribution& source, const OTDistribution& target,
                        double lambda, int iterations, std::vector<double>* d_source = nullptr);

double sinkhorn_ot(const Canvas& render, const Canvas& target, const OTConfig& cfg,
                   Canvas* d_render = nullptr, double scale = 1.0);

// --- combined objectives -------------------------------------------------------

/// Geometry of one optimized stroke as seen by the losses.
struct StrokeTerms {
  const CoverageMask* mask = nullptr;
  const StampSequence* stamps = nullptr;
};

struct LossBreakdown {
  double pixel = 0.0;
  double perc = 0.0;
  double grad = 0.0;
  double seg = 0.0;
  double ot = 0.0;
  double area = 0.0;
  double total = 0.0;
};

struct LossGradient {
  Canvas d_render;
  std::vector<CoverageMask> d_masks;     // same boxes as the input masks
  std::vector<StampAdjoint> d_stamps;    // positions only
};

/// Total appearance objective with target-side quantities precomputed.
class AppearanceLoss {
 public:
  AppearanceLoss(const Canvas& target, const LabelMap* labels, const LossWeights& weights,
                 const OTConfig& ot, const FeatureExtractorHook* hook = nullptr);

  LossBreakdown evaluate(const Canvas& render, const std::vector<StrokeTerms>& strokes,
                         LossGradient* grad = nullptr) const;

  const Canvas& target() const { return target_; }
  const LossWeights& weights() const { return weights_; }

 private:
  Canvas target_;
  const LabelMap* labels_;
  LossWeights weights_;
  OTConfig ot_;
  const FeatureExtractorHook* hook_;
  std::vector<double> target_field_;  // interleaved Sobel (gx, gy)
  OTDistribution target_ot_;
};

LossBreakdown total_app_loss(const Canvas& render, const Canvas& target,
                             const std::vector<StrokeTerms>& strokes, const LabelMap* labels,
                             const LossWeights& weights, const OTConfig& ot,
                             const FeatureExtractorHook* hook = nullptr);

double style_loss(const Canvas& render, const Canvas& target,
                  const std::vector<StrokeTerms>& strokes, const LossWeights& weights,
                  const FeatureExtractorHook* hook = nullptr);

}  // namespace brushrecon
