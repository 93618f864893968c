#pragma once

#include <span>
#include <vector>

namespace brushrecon {

struct RmsProp {
  double lr = 0.003;
  double rho = 0.99;
  double eps = 1e-8;
  std::vector<double> v;
  long step_count = 0;

  /// v <- rho v + (1 - rho) g^2;  p <- p - lr g / (sqrt(v) + eps).
  void step(std::span<double> params, std::span<const double> grads);
};

struct Adam {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  long step_count = 0;

  /// Bias-corrected Adam update at the current `lr`.
  void step(std::span<double> params, std::span<const double> grads);
};

/// Linear warm-up, constant plateau, cosine decay to zero.
struct Schedule {
  long total_steps = 100;
  double peak_lr = 0.01;
  double warmup_frac = 0.05;
  double constant_frac = 0.70;
  double decay_frac = 0.25;
};

void validate(const Schedule& s);

double lr_schedule(const Schedule& s, long step);

}  // namespace brushrecon
