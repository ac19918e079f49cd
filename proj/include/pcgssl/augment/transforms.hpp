#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "pcgssl/augment/butterworth.hpp"
#include "pcgssl/core/error.hpp"
#include "pcgssl/core/random.hpp"
#include "pcgssl/dsp/resample.hpp"

// Time-domain augmentations. Each maps n samples to n samples.

namespace pcgssl::augment {

template <class T>
std::vector<T> cutoff_filter(std::span<const T> x, FilterType type, double cutoff_hz, double sample_rate = kTargetRate) {
  return filter_causal(x, design_butterworth4(type, cutoff_hz, sample_rate));
}

template <class T>
std::vector<T> rewind(std::span<const T> x) {
  return {x.rbegin(), x.rend()};
}

template <class T>
std::vector<T> invert(std::span<const T> x) {
  std::vector<T> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](T v) { return -v; });
  return y;
}

/// Multiplies the whole signal by one draw s ~ U[lo, hi).
template <class T>
std::vector<T> random_scale(std::span<const T> x, double lo, double hi, Rng& rng) {
  require(lo > 0.0 && lo < hi, Errc::InvalidArgument, "random_scale needs 0 < lo < hi");
  const double s = rng.uniform(lo, hi);
  std::vector<T> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [s](T v) { return static_cast<T>(s * v); });
  return y;
}

/// Adds i.i.d. noise u ~ U[-half_width, half_width) to each sample.
template <class T>
std::vector<T> uniform_noise(std::span<const T> x, double half_width, Rng& rng) {
  require(half_width > 0.0, Errc::InvalidArgument, "noise range must be positive");
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(x[i] + rng.uniform(-half_width, half_width));
  return y;
}

/// Linear-interpolation upsampling by 2 (the last odd sample repeats the last
/// input), keeping the central n samples.
template <class T>
std::vector<T> upsample2_crop(std::span<const T> x) {
  const std::size_t n = x.size();
  std::vector<T> y(n);
  if (n == 0) return y;
  const std::size_t start = n / 2;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = start + k;
    const std::size_t i = j / 2;
    if (j % 2 == 0) {
      y[k] = x[i];
    } else {
      y[k] = i + 1 < n ? static_cast<T>((static_cast<double>(x[i]) + static_cast<double>(x[i + 1])) / 2.0) : x[i];
    }
  }
  return y;
}

}  // namespace pcgssl::augment
