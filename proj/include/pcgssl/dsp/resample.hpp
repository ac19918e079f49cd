#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "pcgssl/core/error.hpp"

namespace pcgssl {

inline constexpr int kTargetRate = 2000;

/// Hamming-windowed sinc low-pass, normalised to unit DC gain.
inline std::vector<double> design_lowpass_fir(std::size_t taps, double cutoff_hz, double sample_rate) {
  require(taps % 2 == 1, Errc::InvalidArgument, "FIR length must be odd");
  require(cutoff_hz > 0 && cutoff_hz < sample_rate / 2, Errc::InvalidCutoff, "FIR cutoff must lie below Nyquist");
  const double fc = cutoff_hz / sample_rate;
  const auto mid = static_cast<double>(taps - 1) / 2.0;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t n = 0; n < taps; ++n) {
    const double t = static_cast<double>(n) - mid;
    const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(taps - 1));
    h[n] = sinc * window;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

/// Mirror index without repeating the edge sample (x[-1] = x[1]).
inline std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * static_cast<long>(n) - 2;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<long>(n) ? i : period - i);
}

/// Brings a recording to 2 kHz. 2 kHz input is returned unchanged; 4 kHz
/// input is low-passed (63-tap FIR, 900 Hz, reflected edges) and every
/// second sample is kept, giving floor(n / 2) samples.
inline std::vector<double> resample_to_2k(std::span<const double> samples, int rate_in) {
  if (rate_in == kTargetRate) return {samples.begin(), samples.end()};
  if (rate_in != 2 * kTargetRate) fail(Errc::UnsupportedRate, "cannot resample " + std::to_string(rate_in) + " Hz to 2000 Hz");

  static const std::vector<double> taps = design_lowpass_fir(63, 900.0, 4000.0);
  const long half = static_cast<long>(taps.size() / 2);
  const std::size_t n = samples.size();
  std::vector<double> out(n / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const long centre = static_cast<long>(2 * i);
    double acc = 0.0;
    if (centre - half >= 0 && centre + half < static_cast<long>(n)) {
      const double* x = samples.data() + (centre - half);
      for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * x[k];
    } else {
      for (std::size_t k = 0; k < taps.size(); ++k) {
        acc += taps[k] * samples[reflect_index(centre - half + static_cast<long>(k), n)];
      }
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace pcgssl
