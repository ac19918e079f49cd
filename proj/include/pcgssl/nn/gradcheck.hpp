#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcgssl/core/random.hpp"
#include "pcgssl/nn/params.hpp"
#include "pcgssl/nn/tape.hpp"

namespace pcgssl::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
  /// Lower bound on the relative-error denominator.
  double denominator_floor = 1e-8;
  /// Replays the unperturbed relu and max-pool branch choices during the
  /// perturbed evaluations. Large networks hold so many near-ties that any
  /// step crosses some of them; locking differentiates the smooth piece that
  /// contains the evaluation point, whose gradient is the true one.
  bool lock_branches = false;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_path;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

template <std::floating_point T>
using ScalarFn = std::function<Var<T>(Tape<T>&, ParameterSet<T>&)>;

/// Compares reverse-mode gradients of a scalar function of `params` against
/// central differences (f(w + eps) - f(w - eps)) / 2 eps on every trainable
/// tensor. The relative error of a coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, denominator_floor).
template <std::floating_point T>
GradCheckReport grad_check(const ScalarFn<T>& f, ParameterSet<T>& params, const GradCheckOptions& opts = {}) {
  params.zero_grad();
  {
    Tape<T> tape;
    auto loss = f(tape, params);
    tape.backward(loss);
  }
  BranchPattern pattern;
  if (opts.lock_branches) {
    Tape<T> tape(false);
    tape.set_branch_pattern(&pattern);
    f(tape, params);
    pattern.replay = true;
  }
  auto evaluate = [&] {
    Tape<T> tape(false);
    if (opts.lock_branches) {
      pattern.cursor = 0;
      tape.set_branch_pattern(&pattern);
    }
    const auto value = static_cast<double>(f(tape, params).value().item());
    require(!opts.lock_branches || pattern.cursor == pattern.choices.size(), Errc::ShapeMismatch,
            "branch pattern replayed on a different graph");
    return value;
  };

  GradCheckReport report;
  Rng rng(derive_seed(opts.seed, {tag("grad_check")}));
  for (auto& [path, tensor] : params) {
    if (params.is_frozen(path)) continue;
    const std::vector<T> analytic(tensor.grad().begin(), tensor.grad().end());
    std::vector<std::size_t> coords;
    if (opts.max_coords_per_tensor == 0 || opts.max_coords_per_tensor >= tensor.size()) {
      for (std::size_t i = 0; i < tensor.size(); ++i) coords.push_back(i);
    } else {
      std::vector<std::size_t> all(tensor.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      rng.shuffle(std::span<std::size_t>(all));
      coords.assign(all.begin(), all.begin() + static_cast<long>(opts.max_coords_per_tensor));
    }
    for (std::size_t i : coords) {
      const T saved = tensor[i];
      tensor[i] = static_cast<T>(saved + opts.eps);
      const double up = evaluate();
      tensor[i] = static_cast<T>(saved - opts.eps);
      const double down = evaluate();
      tensor[i] = saved;
      const double numeric = (up - down) / (2.0 * opts.eps);
      const double a = analytic[i];
      if (!std::isfinite(a) || !std::isfinite(numeric)) {
        fail(Errc::NonFiniteGradient, "non-finite gradient at " + path + "[" + std::to_string(i) + "]");
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.denominator_floor});
      const double rel = a == numeric ? 0.0 : std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error || report.worst_path.empty()) {
        if (rel >= report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_path = path;
          report.worst_index = i;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  return report;
}

}  // namespace pcgssl::nn
