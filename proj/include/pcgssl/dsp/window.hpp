#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/core/error.hpp"
#include "pcgssl/dataio/records.hpp"
#include "pcgssl/dsp/resample.hpp"

namespace pcgssl {

/// 5 s at 2 kHz.
inline constexpr std::size_t kWindowLength = 10000;

/// A fixed-length mono segment with its provenance. `label` is a class index
/// of whichever task the window was labeled for.
struct Window {
  std::vector<float> samples;
  std::string patient_id;
  std::size_t recording_index = 0;
  Location location = Location::Other;
  double offset_s = 0.0;
  std::optional<int> label;
};

struct WindowingParams {
  double window_s = 5.0;
  double hop_s = 2.5;
  double trim_s = 2.0;
  int sample_rate = kTargetRate;

  std::size_t window_samples() const { return static_cast<std::size_t>(std::llround(window_s * sample_rate)); }
  std::size_t hop_samples() const { return static_cast<std::size_t>(std::llround(hop_s * sample_rate)); }
  std::size_t trim_samples() const { return static_cast<std::size_t>(std::llround(trim_s * sample_rate)); }

  void validate() const {
    require(window_s > 0 && hop_s > 0 && hop_s <= window_s, Errc::InvalidArgument, "need window_s > 0 and 0 < hop_s <= window_s");
    require(trim_s >= 0, Errc::InvalidArgument, "trim_s must be non-negative");
    require(sample_rate > 0, Errc::InvalidArgument, "sample rate must be positive");
  }
};

struct RecordingSource {
  std::string patient_id;
  std::size_t recording_index = 0;
  Location location = Location::Other;
};

/// Number of windows cut from a recording of `n` samples.
inline std::size_t window_count(std::size_t n, const WindowingParams& params = {}) {
  const std::size_t trim = params.trim_samples();
  const std::size_t len = params.window_samples();
  if (n < 2 * trim + len) return 0;
  return (n - 2 * trim - len) / params.hop_samples() + 1;
}

/// Drops `trim_s` seconds at both ends and cuts windows at offsets
/// trim_s + k * hop_s. A trailing remainder shorter than a window is dropped.
inline std::vector<Window> trim_and_window(std::span<const double> samples, const RecordingSource& source,
                                           const WindowingParams& params = {}) {
  params.validate();
  const std::size_t count = window_count(samples.size(), params);
  const std::size_t trim = params.trim_samples();
  const std::size_t len = params.window_samples();
  const std::size_t hop = params.hop_samples();
  std::vector<Window> windows;
  windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = trim + k * hop;
    Window w;
    w.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      const double v = samples[start + i];
      require(std::isfinite(v), Errc::InvalidArgument, "non-finite sample in recording of " + source.patient_id);
      w.samples[i] = static_cast<float>(v);
    }
    w.patient_id = source.patient_id;
    w.recording_index = source.recording_index;
    w.location = source.location;
    w.offset_s = static_cast<double>(start) / params.sample_rate;
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace pcgssl
