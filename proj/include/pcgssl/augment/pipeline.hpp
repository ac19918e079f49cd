#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pcgssl/augment/transforms.hpp"
#include "pcgssl/core/error.hpp"
#include "pcgssl/core/random.hpp"
#include "pcgssl/dsp/window.hpp"

namespace pcgssl {

enum class AugmentationKind { HighPass, LowPass, Rewind, Invert, RandomScale, UniformNoise, Upsample2 };

/// How the single noise "range" number maps onto the uniform support.
enum class NoiseRange { PeakToPeak, HalfWidth };

constexpr std::string_view to_string(AugmentationKind k) noexcept {
  switch (k) {
    case AugmentationKind::HighPass: return "highpass";
    case AugmentationKind::LowPass: return "lowpass";
    case AugmentationKind::Rewind: return "rewind";
    case AugmentationKind::Invert: return "invert";
    case AugmentationKind::RandomScale: return "random_scale";
    case AugmentationKind::UniformNoise: return "uniform_noise";
    case AugmentationKind::Upsample2: return "upsample2";
  }
  return "?";
}

inline AugmentationKind parse_augmentation_kind(std::string_view name) {
  for (auto k : {AugmentationKind::HighPass, AugmentationKind::LowPass, AugmentationKind::Rewind, AugmentationKind::Invert,
                 AugmentationKind::RandomScale, AugmentationKind::UniformNoise, AugmentationKind::Upsample2}) {
    if (name == to_string(k)) return k;
  }
  fail(Errc::InvalidConfig, "unknown augmentation kind '" + std::string(name) + "'");
}

struct AugmentationSpec {
  AugmentationKind kind = AugmentationKind::Rewind;
  std::optional<double> cutoff_hz;
  std::optional<std::pair<double, double>> scale_range;
  std::optional<double> noise_range;
  NoiseRange noise_convention = NoiseRange::PeakToPeak;
  double probability = 1.0;

  static AugmentationSpec high_pass(double cutoff, double p = 1.0) { return {AugmentationKind::HighPass, cutoff, {}, {}, {}, p}; }
  static AugmentationSpec low_pass(double cutoff, double p = 1.0) { return {AugmentationKind::LowPass, cutoff, {}, {}, {}, p}; }
  static AugmentationSpec rewind(double p = 1.0) { return {AugmentationKind::Rewind, {}, {}, {}, {}, p}; }
  static AugmentationSpec invert(double p = 1.0) { return {AugmentationKind::Invert, {}, {}, {}, {}, p}; }
  static AugmentationSpec random_scale(double lo = 0.5, double hi = 2.0, double p = 1.0) {
    return {AugmentationKind::RandomScale, {}, std::pair{lo, hi}, {}, {}, p};
  }
  static AugmentationSpec uniform_noise(double range = 0.02, double p = 1.0) {
    return {AugmentationKind::UniformNoise, {}, {}, range, {}, p};
  }
  static AugmentationSpec upsample2(double p = 1.0) { return {AugmentationKind::Upsample2, {}, {}, {}, {}, p}; }

  bool is_filter() const { return kind == AugmentationKind::HighPass || kind == AugmentationKind::LowPass; }

  void validate() const {
    require(probability >= 0.0 && probability <= 1.0, Errc::InvalidConfig, "augmentation probability must lie in [0, 1]");
    require(cutoff_hz.has_value() == is_filter(), Errc::InvalidConfig, "cutoff is required for, and only for, filters");
    if (cutoff_hz && !(*cutoff_hz > 0.0 && *cutoff_hz < kTargetRate / 2.0)) {
      fail(Errc::InvalidCutoff, "cutoff must lie in (0, 1000) Hz");
    }
    require(scale_range.has_value() == (kind == AugmentationKind::RandomScale), Errc::InvalidConfig,
            "scale range is required for, and only for, random_scale");
    if (scale_range) {
      require(scale_range->first > 0.0 && scale_range->first < scale_range->second, Errc::InvalidConfig,
              "random_scale needs 0 < lo < hi");
    }
    require(noise_range.has_value() == (kind == AugmentationKind::UniformNoise), Errc::InvalidConfig,
            "noise range is required for, and only for, uniform_noise");
    if (noise_range) require(*noise_range > 0.0, Errc::InvalidConfig, "noise range must be positive");
  }

  double noise_half_width() const {
    return noise_convention == NoiseRange::PeakToPeak ? *noise_range / 2.0 : *noise_range;
  }

  /// Short stable name, e.g. "highpass250", "uniform_noise0.02", "rewind@0.5".
  std::string label() const {
    std::ostringstream out;
    out << to_string(kind);
    if (cutoff_hz) out << *cutoff_hz;
    if (noise_range) out << *noise_range << (noise_convention == NoiseRange::HalfWidth ? "hw" : "");
    if (scale_range && (scale_range->first != 0.5 || scale_range->second != 2.0)) {
      out << scale_range->first << '-' << scale_range->second;
    }
    if (probability != 1.0) out << '@' << probability;
    return out.str();
  }

  bool operator==(const AugmentationSpec&) const = default;
};

struct AugmentationPipeline {
  std::vector<AugmentationSpec> stages;

  bool empty() const { return stages.empty(); }

  void validate() const {
    for (const auto& s : stages) s.validate();
  }

  /// Stage labels joined by '+'; "none" for the identity pipeline.
  std::string label() const {
    if (stages.empty()) return "none";
    std::string out;
    for (const auto& s : stages) out += (out.empty() ? "" : "+") + s.label();
    return out;
  }

  bool operator==(const AugmentationPipeline&) const = default;
};

/// Applies one stage unconditionally.
template <class T>
std::vector<T> apply_stage(std::span<const T> x, const AugmentationSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case AugmentationKind::HighPass: return augment::cutoff_filter(x, FilterType::HighPass, *spec.cutoff_hz);
    case AugmentationKind::LowPass: return augment::cutoff_filter(x, FilterType::LowPass, *spec.cutoff_hz);
    case AugmentationKind::Rewind: return augment::rewind(x);
    case AugmentationKind::Invert: return augment::invert(x);
    case AugmentationKind::RandomScale: return augment::random_scale(x, spec.scale_range->first, spec.scale_range->second, rng);
    case AugmentationKind::UniformNoise: return augment::uniform_noise(x, spec.noise_half_width(), rng);
    case AugmentationKind::Upsample2: return augment::upsample2_crop(x);
  }
  return {x.begin(), x.end()};
}

/// Runs the stages in order. Each stage consumes one Bernoulli draw and fires
/// with its own probability, so the random stream layout does not depend on
/// which stages fired.
template <class T>
std::vector<T> apply_pipeline(std::span<const T> x, const AugmentationPipeline& pipeline, Rng& rng) {
  std::vector<T> current(x.begin(), x.end());
  for (const auto& stage : pipeline.stages) {
    if (rng.uniform01() < stage.probability) current = apply_stage(std::span<const T>(current), stage, rng);
  }
  return current;
}

inline Window apply_pipeline(const Window& w, const AugmentationPipeline& pipeline, Rng& rng) {
  Window out;
  out.samples = apply_pipeline(std::span<const float>(w.samples), pipeline, rng);
  out.patient_id = w.patient_id;
  out.recording_index = w.recording_index;
  out.location = w.location;
  out.offset_s = w.offset_s;
  out.label = w.label;
  return out;
}

/// The augmentation pair of the submitted challenge entry.
inline std::pair<AugmentationPipeline, AugmentationPipeline> submitted_view_pipelines() {
  AugmentationPipeline view1{{AugmentationSpec::high_pass(250.0), AugmentationSpec::rewind(0.5), AugmentationSpec::invert(0.5)}};
  AugmentationPipeline view2{{AugmentationSpec::uniform_noise(0.02), AugmentationSpec::upsample2(0.5)}};
  return {view1, view2};
}

}  // namespace pcgssl
