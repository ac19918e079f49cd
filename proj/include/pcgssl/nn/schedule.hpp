#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "pcgssl/core/error.hpp"

namespace pcgssl::nn {

struct ScheduleConfig {
  double peak_lr = 0.1;
  std::size_t warmup_epochs = 5;
  std::size_t total_epochs = 50;
  double alpha = 0.01;
  std::size_t steps_per_epoch = 1;

  std::size_t warmup_steps() const { return warmup_epochs * steps_per_epoch; }
  std::size_t total_steps() const { return total_epochs * steps_per_epoch; }

  void validate() const {
    require(warmup_epochs > 0 && warmup_epochs < total_epochs, Errc::InvalidConfig, "need 0 < warmup_epochs < total_epochs");
    require(alpha >= 0.0 && alpha <= 1.0, Errc::InvalidConfig, "alpha must lie in [0, 1]");
    require(peak_lr >= 0.0, Errc::InvalidConfig, "peak_lr must be non-negative");
    require(steps_per_epoch > 0, Errc::InvalidConfig, "steps_per_epoch must be positive");
  }
};

/// Linear warm-up to peak_lr over the warm-up steps, then cosine decay that
/// reaches peak_lr * alpha exactly on the last step.
inline double lr_at(std::size_t step, const ScheduleConfig& cfg) {
  cfg.validate();
  const std::size_t warmup = cfg.warmup_steps();
  const std::size_t total = cfg.total_steps();
  if (step >= total) fail(Errc::StepOutOfRange, "step " + std::to_string(step) + " outside [0, " + std::to_string(total) + ")");
  if (step < warmup) return cfg.peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const std::size_t decay_span = total - warmup - 1;
  const double progress = decay_span == 0 ? 1.0 : static_cast<double>(step - warmup) / static_cast<double>(decay_span);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return cfg.peak_lr * (cfg.alpha + (1.0 - cfg.alpha) * cosine);
}

}  // namespace pcgssl::nn
