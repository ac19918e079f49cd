#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "pcgssl/core/error.hpp"
#include "pcgssl/dsp/resample.hpp"
#include "pcgssl/dsp/window.hpp"
#include "support/oracles.hpp"

using namespace pcgssl;

TEST(Resample, TwoKilohertzIsIdentity) {
  const std::vector<double> x{0.1, -0.3, 0.7, 0.0, 1.0};
  EXPECT_EQ(resample_to_2k(x, 2000), x);
}

TEST(Resample, FourKilohertzHalvesLength) {
  EXPECT_EQ(resample_to_2k(std::vector<double>(8000, 0.2), 4000).size(), 4000u);
  EXPECT_EQ(resample_to_2k(std::vector<double>(8001, 0.2), 4000).size(), 4000u);
}

TEST(Resample, KeepsLowToneAmplitude) {
  const auto x = oracle::sine(100, 4000, 8000);
  const auto y = resample_to_2k(x, 4000);
  const double a = oracle::tone_amplitude(y, 100, 2000, 0.1);
  EXPECT_NEAR(a, 1.0, 0.02);
  // The peak sits at 100 Hz: neighbouring tones are far weaker.
  EXPECT_LT(oracle::tone_amplitude(y, 90, 2000, 0.1), 0.2 * a);
  EXPECT_LT(oracle::tone_amplitude(y, 110, 2000, 0.1), 0.2 * a);
}

TEST(Resample, SuppressesContentAboveNewNyquist) {
  const auto y = resample_to_2k(oracle::sine(1500, 4000, 8000), 4000);
  // 1500 Hz would alias onto 500 Hz.
  EXPECT_LT(oracle::tone_amplitude(y, 500, 2000, 0.1), 0.05);
}

TEST(Resample, OtherRatesAreRejected) {
  try {
    resample_to_2k(std::vector<double>(10, 0.0), 44100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnsupportedRate);
  }
}

namespace {

std::vector<double> ramp(std::size_t n) {
  std::vector<double> x(n);
  std::iota(x.begin(), x.end(), 0.0);
  return x;
}

}  // namespace

TEST(Windowing, ThirtySecondsGiveNineWindows) {
  const auto w = trim_and_window(ramp(60000), {"p", 0, Location::AV});
  ASSERT_EQ(w.size(), 9u);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_DOUBLE_EQ(w[k].offset_s, 2.0 + 2.5 * k);
  EXPECT_DOUBLE_EQ(w.back().offset_s, 22.0);
}

TEST(Windowing, BoundaryDurations) {
  const auto nine = trim_and_window(ramp(18000), {"p", 0, Location::AV});
  ASSERT_EQ(nine.size(), 1u);
  EXPECT_DOUBLE_EQ(nine[0].offset_s, 2.0);
  EXPECT_TRUE(trim_and_window(ramp(17800), {"p", 0, Location::AV}).empty());
  EXPECT_TRUE(trim_and_window(std::vector<double>{}, {"p", 0, Location::AV}).empty());
}

TEST(Windowing, CountsAndOffsetsMatchWalkOverSixtySeconds) {
  for (int ds = 0; ds <= 600; ++ds) {
    const auto expected = oracle::window_offsets(ds);
    const std::size_t n = static_cast<std::size_t>(ds) * 200;
    ASSERT_EQ(window_count(n), expected.size()) << ds;
    const auto w = trim_and_window(ramp(n), {"p", 1, Location::MV});
    ASSERT_EQ(w.size(), expected.size()) << ds;
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(w[k].offset_s, expected[k], 1e-12);
  }
}

TEST(Windowing, WindowsAreExactSlicesOutsideTheTrim) {
  const std::size_t n = 47321;
  const auto w = trim_and_window(ramp(n), {"p", 3, Location::TV});
  ASSERT_FALSE(w.empty());
  for (const auto& win : w) {
    ASSERT_EQ(win.samples.size(), kWindowLength);
    const auto start = static_cast<std::size_t>(win.samples.front());
    EXPECT_DOUBLE_EQ(start / 2000.0, win.offset_s);
    EXPECT_GE(start, 4000u);
    EXPECT_LE(static_cast<std::size_t>(win.samples.back()), n - 4000 - 1);
    for (std::size_t i = 0; i < kWindowLength; ++i) ASSERT_EQ(win.samples[i], static_cast<float>(start + i));
    EXPECT_EQ(win.patient_id, "p");
    EXPECT_EQ(win.recording_index, 3u);
    EXPECT_EQ(win.location, Location::TV);
  }
  for (std::size_t k = 1; k < w.size(); ++k) {
    // Consecutive windows share window - hop = 2.5 s of signal.
    EXPECT_EQ(w[k].samples.front(), w[k - 1].samples[5000]);
  }
}

TEST(Windowing, RejectsNonFiniteSamples) {
  auto x = ramp(20000);
  x[9000] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(trim_and_window(x, {"p", 0, Location::AV}), Error);
}
