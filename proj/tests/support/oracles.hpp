#pragma once

// Independent reference computations used by the tests. Each one is written
// straight from its defining formula and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

namespace oracle {

/// NT-Xent from the definition: cosine similarities over temperature, anchor i
/// paired with i + N (mod 2N), denominator over every k != i, mean over 2N.
inline double nt_xent(const std::vector<std::vector<double>>& z, double temperature) {
  const std::size_t rows = z.size(), n = rows / 2;
  auto cosine = [&](std::size_t a, std::size_t b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t d = 0; d < z[a].size(); ++d) {
      ab += z[a][d] * z[b][d];
      aa += z[a][d] * z[a][d];
      bb += z[b][d] * z[b][d];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  double total = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t j = i < n ? i + n : i - n;
    double denom = 0;
    for (std::size_t k = 0; k < rows; ++k) {
      if (k != i) denom += std::exp(cosine(i, k) / temperature);
    }
    total += -std::log(std::exp(cosine(i, j) / temperature) / denom);
  }
  return total / static_cast<double>(rows);
}

/// Amplitude of the `freq` component of `x` by a single-bin DFT over an
/// integer number of periods taken from the tail of the signal (past any
/// filter transient).
inline double tone_amplitude(const std::vector<double>& x, double freq, double fs, double skip_s = 0.5) {
  const auto start = static_cast<std::size_t>(skip_s * fs);
  const double period = fs / freq;
  const auto periods = static_cast<std::size_t>(static_cast<double>(x.size() - start) / period);
  const auto len = static_cast<std::size_t>(std::floor(static_cast<double>(periods) * period));
  double re = 0, im = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const double ph = 2 * std::numbers::pi * freq * static_cast<double>(i) / fs;
    re += x[start + i] * std::cos(ph);
    im -= x[start + i] * std::sin(ph);
  }
  return 2 * std::hypot(re, im) / static_cast<double>(len);
}

inline std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * freq * static_cast<double>(i) / fs);
  return x;
}

/// Window starts (seconds) by walking candidate offsets trim, trim + hop, ...
/// in 0.1 s units and keeping those whose window ends inside the trimmed region.
inline std::vector<double> window_offsets(int duration_ds, int trim_ds = 20, int window_ds = 50, int hop_ds = 25) {
  std::vector<double> out;
  for (int start = trim_ds; start + window_ds <= duration_ds - trim_ds; start += hop_ds) out.push_back(start / 10.0);
  return out;
}

/// Patient-by-patient weighted score: every patient contributes its class
/// weight to the denominator and, when predicted correctly, to the numerator.
inline double weighted_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted, const std::vector<double>& weights) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    den += weights[truth[i]];
    if (truth[i] == predicted[i]) num += weights[truth[i]];
  }
  return num / den;
}

/// Murmur rule written as nested conditions over counts
/// (0 = Present, 1 = Unknown, 2 = Absent).
inline int murmur_rule(const std::vector<int>& labels) {
  int present = 0, unknown = 0;
  for (int l : labels) {
    present += l == 0;
    unknown += l == 1;
  }
  if (present >= 1) return 0;
  if (unknown >= 1) return 1;
  return 2;
}

/// Outcome rule: Abnormal (0) unless every recording is Normal (1).
inline int outcome_rule(const std::vector<int>& labels) {
  return std::all_of(labels.begin(), labels.end(), [](int l) { return l == 1; }) ? 1 : 0;
}

/// Mean then first maximum.
inline int mean_argmax(const std::vector<std::vector<double>>& probs) {
  std::vector<double> mean(probs[0].size(), 0);
  for (const auto& p : probs) {
    for (std::size_t k = 0; k < p.size(); ++k) mean[k] += p[k] / static_cast<double>(probs.size());
  }
  int best = 0;
  for (std::size_t k = 1; k < mean.size(); ++k) {
    if (mean[k] > mean[best]) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace oracle
