#include "brushrecon/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "brushrecon/diff.hpp"

namespace brushrecon {

namespace {

void check(std::span<double> params, std::span<const double> grads, const char* who) {
  if (params.size() != grads.size()) {
    throw Error(std::string(who) + ": parameter/gradient length mismatch");
  }
  for (double g : grads)
    if (!std::isfinite(g)) throw NonFiniteError(std::string(who) + ": non-finite gradient");
}

}  // namespace

void RmsProp::step(std::span<double> params, std::span<const double> grads) {
  check(params, grads, "rmsprop");
  if (v.size() != params.size()) v.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    v[i] = rho * v[i] + (1.0 - rho) * grads[i] * grads[i];
    params[i] -= lr * grads[i] / (std::sqrt(v[i]) + eps);
  }
  ++step_count;
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  check(params, grads, "adam");
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  }
  ++step_count;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

void validate(const Schedule& s) {
  if (s.total_steps < 1) throw Error("schedule: total_steps must be >= 1");
  if (s.warmup_frac < 0 || s.constant_frac < 0 || s.decay_frac < 0) {
    throw Error("schedule: fractions must be >= 0");
  }
  if (std::abs(s.warmup_frac + s.constant_frac + s.decay_frac - 1.0) > 1e-12) {
    throw Error("schedule: fractions must sum to 1");
  }
}

double lr_schedule(const Schedule& s, long step) {
  validate(s);
  if (step < 0 || step > s.total_steps) {
    throw Error("lr_schedule: step " + std::to_string(step) + " outside [0, " +
                std::to_string(s.total_steps) + "]");
  }
  const double x = static_cast<double>(step) / static_cast<double>(s.total_steps);
  const double warm_end = s.warmup_frac;
  const double flat_end = s.warmup_frac + s.constant_frac;
  if (x <= warm_end) return warm_end > 0.0 ? s.peak_lr * x / warm_end : s.peak_lr;
  if (x <= flat_end) return s.peak_lr;
  const double u = s.decay_frac > 0.0 ? std::min(1.0, (x - flat_end) / s.decay_frac) : 1.0;
  return s.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
}

}  // namespace brushrecon
