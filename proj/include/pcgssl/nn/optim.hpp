#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pcgssl/nn/params.hpp"

namespace pcgssl::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Reads each tensor's gradient slot; frozen paths
/// and tensors without a gradient are skipped.
template <std::floating_point T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterSet<T>& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [path, w] : params) {
      if (params.is_frozen(path) || !w.has_grad()) continue;
      auto& m = m_[path];
      auto& v = v_[path];
      if (m.size() != w.size()) {
        m.assign(w.size(), 0.0);
        v.assign(w.size(), 0.0);
      }
      auto data = w.data();
      const auto g = std::as_const(w).grad();
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double gi = g[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double update = cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
        data[i] = static_cast<T>(data[i] - update);
      }
    }
  }

  std::size_t steps() const { return t_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

struct LarsConfig {
  double momentum = 0.9;
  double weight_decay = 0.0;
  double eps = 1e-9;
  /// Multiplies the trust ratio.
  double trust_coefficient = 1.0;
  /// Rank-1 tensors (biases) use a trust ratio of 1 unless this is set.
  bool adapt_rank1 = false;
};

/// Layer-wise adaptive rate scaling with heavy-ball momentum:
///   ratio = c |w| / (|g| + wd |w| + eps), c the trust coefficient
///   v <- momentum v + ratio * lr * (g + wd w);  w <- w - v
/// The ratio falls back to 1 when |w| or |g| is zero, so zero-initialised
/// tensors can still move.
template <std::floating_point T>
class Lars {
 public:
  explicit Lars(LarsConfig cfg = {}) : cfg_(cfg) {}

  double trust_ratio(const Tensor<T>& w) const {
    if (w.rank() <= 1 && !cfg_.adapt_rank1) return 1.0;
    double wn = 0.0, gn = 0.0;
    const auto g = w.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      wn += static_cast<double>(w[i]) * w[i];
      gn += static_cast<double>(g[i]) * g[i];
    }
    wn = std::sqrt(wn);
    gn = std::sqrt(gn);
    if (wn == 0.0 || gn == 0.0) return 1.0;
    return cfg_.trust_coefficient * wn / (gn + cfg_.weight_decay * wn + cfg_.eps);
  }

  void step(ParameterSet<T>& params, double lr) {
    for (auto& [path, w] : params) {
      if (params.is_frozen(path) || !w.has_grad()) continue;
      auto& v = velocity_[path];
      if (v.size() != w.size()) v.assign(w.size(), 0.0);
      const double scaled_lr = trust_ratio(w) * lr;
      auto data = w.data();
      const auto g = std::as_const(w).grad();
      for (std::size_t i = 0; i < data.size(); ++i) {
        v[i] = cfg_.momentum * v[i] + scaled_lr * (g[i] + cfg_.weight_decay * data[i]);
        data[i] = static_cast<T>(data[i] - v[i]);
      }
    }
  }

  const LarsConfig& config() const { return cfg_; }

 private:
  LarsConfig cfg_;
  std::map<std::string, std::vector<double>> velocity_;
};

}  // namespace pcgssl::nn
