#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/core/random.hpp"
#include "pcgssl/dataio/patient_file.hpp"
#include "pcgssl/dataio/wav.hpp"

namespace pcgssl::app {

/// A toy phonocardiogram corpus: S1/S2 bursts of low-frequency energy, plus a
/// 150-400 Hz systolic murmur at the patient's murmur locations. Outcome is
/// Abnormal exactly when the murmur is Present.
struct SyntheticOptions {
  std::size_t patients = 40;
  std::size_t min_recordings = 2;
  std::size_t max_recordings = 3;
  double duration_s = 15.0;
  int sample_rate = 4000;
  double present_fraction = 0.4;
  double unknown_fraction = 0.0;
  double murmur_gain = 0.35;
  double noise_level = 0.01;
  std::size_t recordings_2016 = 0;
  std::size_t first_id = 50000;
  std::uint64_t seed = 7;
};

namespace detail {

/// Sum of sinusoids with random frequencies in [lo, hi) and random phases.
inline void add_band(std::vector<double>& x, std::size_t start, std::size_t len, double lo, double hi, double amp,
                     bool crescendo, int fs, Rng& rng) {
  constexpr int kTones = 12;
  std::array<double, kTones> freq, phase;
  for (int k = 0; k < kTones; ++k) {
    freq[k] = rng.uniform(lo, hi);
    phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  for (std::size_t i = 0; i < len && start + i < x.size(); ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(len);
    const double env = crescendo ? 1.0 - std::abs(2.0 * u - 1.0) : std::sin(std::numbers::pi * u);
    const double t = static_cast<double>(i) / fs;
    double v = 0.0;
    for (int k = 0; k < kTones; ++k) v += std::sin(2.0 * std::numbers::pi * freq[k] * t + phase[k]);
    x[start + i] += amp * env * v / std::sqrt(static_cast<double>(kTones));
  }
}

}  // namespace detail

/// One synthetic recording.
inline std::vector<double> synthesize_pcg(double duration_s, int fs, bool murmur, double murmur_gain, double noise_level, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  std::vector<double> x(n, 0.0);
  const double period = 60.0 / rng.uniform(60.0, 100.0);
  const double gain = rng.uniform(0.6, 1.0);
  for (double beat = rng.uniform(0.0, period); beat < duration_s; beat += period * rng.uniform(0.97, 1.03)) {
    const auto s1 = static_cast<std::size_t>(beat * fs);
    const auto s2 = static_cast<std::size_t>((beat + 0.35 * period) * fs);
    const auto burst = static_cast<std::size_t>(0.09 * fs);
    detail::add_band(x, s1, burst, 25.0, 120.0, 0.5 * gain, false, fs, rng);
    detail::add_band(x, s2, burst * 4 / 5, 40.0, 140.0, 0.4 * gain, false, fs, rng);
    if (murmur && s2 > s1 + burst) {
      detail::add_band(x, s1 + burst, s2 - s1 - burst, 150.0, 400.0, murmur_gain * gain, true, fs, rng);
    }
  }
  for (auto& v : x) v = std::clamp(v + rng.uniform(-noise_level, noise_level), -0.99, 0.99);
  return x;
}

/// Writes `<id>.txt` patient files with `<id>_<LOC>.wav` recordings into
/// `dir_2022`, and, when `recordings_2016` > 0, an unlabeled RECORDS-indexed
/// set into `dir_2016`. Returns the patients written.
inline std::vector<PatientRecord> write_synthetic_corpus(const std::filesystem::path& dir_2022, const std::filesystem::path& dir_2016,
                                                         const SyntheticOptions& opt = {}) {
  std::filesystem::create_directories(dir_2022);
  Rng rng(derive_seed(opt.seed, {tag("synthetic")}));
  const std::vector<Location> sites{Location::AV, Location::PV, Location::TV, Location::MV};
  std::vector<PatientRecord> patients;
  for (std::size_t p = 0; p < opt.patients; ++p) {
    PatientRecord rec;
    rec.patient_id = std::to_string(opt.first_id + p);
    rec.sample_rate_declared = opt.sample_rate;
    const double u = rng.uniform01();
    rec.murmur = u < opt.present_fraction ? Murmur::Present : u < opt.present_fraction + opt.unknown_fraction ? Murmur::Unknown : Murmur::Absent;
    rec.outcome = *rec.murmur == Murmur::Present ? Outcome::Abnormal : Outcome::Normal;

    auto order = sites;
    rng.shuffle(std::span<Location>(order));
    const std::size_t count = opt.min_recordings + rng.below(opt.max_recordings - opt.min_recordings + 1);
    order.resize(std::min(count, order.size()));
    std::sort(order.begin(), order.end());
    if (*rec.murmur == Murmur::Present) {
      rec.murmur_locations.insert(order[rng.below(order.size())]);
      for (auto loc : order) {
        if (rng.bernoulli(0.5)) rec.murmur_locations.insert(loc);
      }
    }
    for (auto loc : order) {
      const std::string wav = rec.patient_id + "_" + std::string(to_string(loc)) + ".wav";
      const bool murmur = rec.murmur_locations.count(loc) > 0;
      const auto signal = synthesize_pcg(opt.duration_s, opt.sample_rate, murmur, opt.murmur_gain, opt.noise_level, rng);
      write_wav(dir_2022 / wav, signal, opt.sample_rate);
      rec.recordings.push_back({loc, wav, opt.sample_rate, signal.size()});
    }
    rec.annotations.emplace_back("Age", "Child");
    std::ofstream(dir_2022 / (rec.patient_id + ".txt")) << format_patient_file(rec);
    patients.push_back(std::move(rec));
  }

  if (opt.recordings_2016 > 0) {
    std::filesystem::create_directories(dir_2016);
    std::ofstream index(dir_2016 / "RECORDS");
    for (std::size_t r = 0; r < opt.recordings_2016; ++r) {
      char name[16];
      std::snprintf(name, sizeof name, "a%04zu", r + 1);
      const auto signal = synthesize_pcg(opt.duration_s, 2000, rng.bernoulli(opt.present_fraction), opt.murmur_gain, opt.noise_level, rng);
      write_wav(dir_2016 / (std::string(name) + ".wav"), signal, 2000);
      index << name << '\n';
    }
  }
  return patients;
}

}  // namespace pcgssl::app
