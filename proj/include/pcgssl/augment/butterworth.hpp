#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "pcgssl/core/error.hpp"

namespace pcgssl {

enum class FilterType { LowPass, HighPass };

/// Normalised second-order section (a0 = 1), transposed direct form II.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

using ButterworthCascade = std::array<Biquad, 2>;

/// 4th-order Butterworth as two bilinear-transform biquads sharing the
/// prewarped cutoff; the section Qs are 1 / (2 cos(pi/8)) and 1 / (2 cos(3pi/8)).
inline ButterworthCascade design_butterworth4(FilterType type, double cutoff_hz, double sample_rate) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0)) {
    fail(Errc::InvalidCutoff, "cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, " +
                                  std::to_string(sample_rate / 2.0) + ") Hz");
  }
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / sample_rate;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);
  ButterworthCascade cascade;
  for (int k = 0; k < 2; ++k) {
    const double q = 1.0 / (2.0 * std::cos(std::numbers::pi * (2 * k + 1) / 8.0));
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    if (type == FilterType::LowPass) {
      s.b0 = (1.0 - cw) / 2.0 / a0;
      s.b1 = (1.0 - cw) / a0;
      s.b2 = s.b0;
    } else {
      s.b0 = (1.0 + cw) / 2.0 / a0;
      s.b1 = -(1.0 + cw) / a0;
      s.b2 = s.b0;
    }
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    cascade[static_cast<std::size_t>(k)] = s;
  }
  return cascade;
}

/// Causal single pass from a zero state.
template <class T>
std::vector<T> filter_causal(std::span<const T> x, const ButterworthCascade& cascade) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : cascade) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return {y.begin(), y.end()};
}

inline double magnitude(const ButterworthCascade& cascade, double freq_hz, double sample_rate) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  return std::abs(cascade[0].response(omega) * cascade[1].response(omega));
}

}  // namespace pcgssl
