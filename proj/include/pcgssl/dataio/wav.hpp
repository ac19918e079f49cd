#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/core/error.hpp"

namespace pcgssl {

struct WavAudio {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate = 0;
};

namespace detail {

inline std::uint32_t read_le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t read_le16(const std::uint8_t* p) { return std::uint16_t(p[0] | p[1] << 8); }

inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

}  // namespace detail

/// Decodes a mono 16-bit PCM RIFF/WAVE byte buffer. Samples are scaled by
/// 1/32768. WAVE_FORMAT_EXTENSIBLE is accepted when its sub-format is PCM.
inline WavAudio decode_wav(std::span<const std::uint8_t> bytes) {
  using detail::read_le16;
  using detail::read_le32;
  require(bytes.size() >= 12, Errc::TruncatedFile, "file shorter than the RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(Errc::UnsupportedEncoding, "not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  int rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      require(size >= 16 && body + 16 <= bytes.size(), Errc::TruncatedFile, "fmt chunk truncated");
      const std::uint8_t* f = bytes.data() + body;
      std::uint16_t format = read_le16(f);
      const std::uint16_t channels = read_le16(f + 2);
      rate = static_cast<int>(read_le32(f + 4));
      const std::uint16_t bits = read_le16(f + 14);
      if (format == 0xFFFE && size >= 40 && body + 26 <= bytes.size()) format = read_le16(f + 24);
      if (format != 1) fail(Errc::UnsupportedEncoding, "only PCM is supported (format tag " + std::to_string(format) + ")");
      if (channels != 1) fail(Errc::UnsupportedEncoding, "only mono is supported (" + std::to_string(channels) + " channels)");
      if (bits != 16) fail(Errc::UnsupportedEncoding, "only 16-bit samples are supported (" + std::to_string(bits) + " bits)");
      require(rate > 0, Errc::UnsupportedEncoding, "sample rate must be positive");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      require(have_fmt, Errc::TruncatedFile, "data chunk before fmt chunk");
      require(size > 0, Errc::TruncatedFile, "empty data chunk");
      require(body + size <= bytes.size(), Errc::TruncatedFile, "data chunk extends past end of file");
      WavAudio audio;
      audio.sample_rate = rate;
      const std::size_t n = size / 2;
      require(n > 0, Errc::TruncatedFile, "data chunk holds no complete sample");
      audio.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<std::int16_t>(read_le16(bytes.data() + body + 2 * i));
        audio.samples[i] = raw / 32768.0;
      }
      return audio;
    }
    pos = body + size + (size & 1u);
  }
  fail(Errc::TruncatedFile, have_fmt ? "no data chunk" : "no fmt chunk");
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline WavAudio decode_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_wav(std::span<const std::uint8_t>(bytes));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

/// Encodes samples as mono 16-bit PCM, clamping to the int16 range.
inline std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate) {
  std::vector<std::uint8_t> out;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_le32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_le32(out, 16);
  detail::put_le16(out, 1);
  detail::put_le16(out, 1);
  detail::put_le32(out, static_cast<std::uint32_t>(sample_rate));
  detail::put_le32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  detail::put_le16(out, 2);
  detail::put_le16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_le32(out, data_bytes);
  for (double x : samples) {
    const double scaled = std::round(x * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    detail::put_le16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
  const auto bytes = encode_wav(samples, sample_rate);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace pcgssl
