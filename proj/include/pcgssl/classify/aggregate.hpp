#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "pcgssl/core/error.hpp"
#include "pcgssl/dataio/records.hpp"

namespace pcgssl {

struct RecordingPrediction {
  std::vector<double> probabilities;
  int label = 0;
};

/// Mean of the window probabilities; argmax with ties to the lower index.
inline RecordingPrediction aggregate_recording(std::span<const std::vector<double>> window_probs) {
  require(!window_probs.empty(), Errc::NoWindows, "recording has no windows");
  const std::size_t c = window_probs.front().size();
  RecordingPrediction out;
  out.probabilities.assign(c, 0.0);
  for (const auto& p : window_probs) {
    require(p.size() == c, Errc::ShapeMismatch, "window probability vectors differ in length");
    for (std::size_t k = 0; k < c; ++k) out.probabilities[k] += p[k];
  }
  for (auto& v : out.probabilities) v /= static_cast<double>(window_probs.size());
  out.label = static_cast<int>(std::max_element(out.probabilities.begin(), out.probabilities.end()) - out.probabilities.begin());
  return out;
}

inline Murmur aggregate_patient_murmur(std::span<const Murmur> recordings) {
  require(!recordings.empty(), Errc::NoWindows, "no recording predictions");
  if (std::ranges::find(recordings, Murmur::Present) != recordings.end()) return Murmur::Present;
  if (std::ranges::find(recordings, Murmur::Unknown) != recordings.end()) return Murmur::Unknown;
  return Murmur::Absent;
}

inline Outcome aggregate_patient_outcome(std::span<const Outcome> recordings) {
  require(!recordings.empty(), Errc::NoWindows, "no recording predictions");
  return std::ranges::find(recordings, Outcome::Abnormal) != recordings.end() ? Outcome::Abnormal : Outcome::Normal;
}

}  // namespace pcgssl
