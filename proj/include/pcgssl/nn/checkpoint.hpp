#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcgssl/nn/backbone.hpp"
#include "pcgssl/nn/params.hpp"

// Checkpoint container (all integers little-endian)
//
//   "PCGSSLCK"                       8-byte magic
//   u32 version                      currently 1
//   u32 M, M bytes                   UTF-8 JSON metadata; "backbone" holds the
//                                    BackboneConfig when the set has one
//   u32 E                            entry count
//   E x entry:
//     u32 L, L bytes                 parameter path
//     u8 dtype                       1 = float32, 2 = float64
//     u8 frozen                      0 / 1
//     u32 rank, rank x u64           shape
//     prod(shape) x dtype            raw values

namespace pcgssl::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline void to_json(nlohmann::json& j, const BackboneConfig& c) {
  j = nlohmann::json{{"n_blocks", c.n_blocks}, {"channels", c.channels}, {"kernel", c.kernel},
                     {"pool", c.pool},         {"input_len", c.input_len}, {"embed_dim", c.embed_dim}};
}

inline void from_json(const nlohmann::json& j, BackboneConfig& c) {
  j.at("n_blocks").get_to(c.n_blocks);
  j.at("channels").get_to(c.channels);
  j.at("kernel").get_to(c.kernel);
  j.at("pool").get_to(c.pool);
  j.at("input_len").get_to(c.input_len);
  j.at("embed_dim").get_to(c.embed_dim);
}

template <std::floating_point T>
struct Checkpoint {
  ParameterSet<T> params;
  nlohmann::json metadata = nlohmann::json::object();
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'P', 'C', 'G', 'S', 'S', 'L', 'C', 'K'};

template <class Int>
void put(std::string& out, Int v) {
  char buf[sizeof(Int)];
  std::memcpy(buf, &v, sizeof(Int));
  out.append(buf, sizeof(Int));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void read(void* dst, std::size_t n) {
    require(pos_ + n <= bytes_.size(), Errc::TruncatedFile, "checkpoint ends early");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  template <class Int>
  Int get() {
    Int v;
    read(&v, sizeof v);
    return v;
  }

  std::string str(std::size_t n) {
    require(pos_ + n <= bytes_.size(), Errc::TruncatedFile, "checkpoint ends early");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Writes to `path` via a temporary file and rename, so readers never see a
/// partial checkpoint.
template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& path, const ParameterSet<T>& params,
                     const nlohmann::json& metadata = nlohmann::json::object()) {
  std::string out(detail::kCheckpointMagic, 8);
  detail::put<std::uint32_t>(out, 1);
  const std::string meta = metadata.dump();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put<std::uint8_t>(out, sizeof(T) == 4 ? 1 : 2);
    detail::put<std::uint8_t>(out, params.is_frozen(name) ? 1 : 0);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(t.ptr()), t.size() * sizeof(T));
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) fail(Errc::Io, "cannot write " + tmp.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) fail(Errc::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Reads a checkpoint, converting stored values to T. When the metadata carries
/// a backbone config, the backbone tensor shapes are validated against it.
template <std::floating_point T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(Errc::Io, "cannot open checkpoint " + path.string());
  detail::Reader in{std::string(std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>{})};

  char magic[8];
  in.read(magic, 8);
  require(std::memcmp(magic, detail::kCheckpointMagic, 8) == 0, Errc::UnsupportedEncoding, path.string() + " is not a checkpoint");
  const auto version = in.get<std::uint32_t>();
  require(version == 1, Errc::UnsupportedEncoding, "unsupported checkpoint version " + std::to_string(version));

  Checkpoint<T> ckpt;
  ckpt.metadata = nlohmann::json::parse(in.str(in.get<std::uint32_t>()));
  const auto entries = in.get<std::uint32_t>();
  for (std::uint32_t e = 0; e < entries; ++e) {
    const std::string name = in.str(in.get<std::uint32_t>());
    const auto dtype = in.get<std::uint8_t>();
    const auto frozen = in.get<std::uint8_t>();
    require(dtype == 1 || dtype == 2, Errc::UnsupportedEncoding, "unknown dtype for " + name);
    Shape shape(in.get<std::uint32_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
    std::vector<T> values(numel(shape));
    if (dtype == 1) {
      std::vector<float> raw(values.size());
      in.read(raw.data(), raw.size() * sizeof(float));
      std::copy(raw.begin(), raw.end(), values.begin());
    } else {
      std::vector<double> raw(values.size());
      in.read(raw.data(), raw.size() * sizeof(double));
      std::copy(raw.begin(), raw.end(), values.begin());
    }
    ckpt.params.add(name, Tensor<T>(std::move(shape), std::move(values)));
    if (frozen) ckpt.params.freeze(name);
  }
  require(in.done(), Errc::UnsupportedEncoding, "trailing bytes in checkpoint " + path.string());
  if (ckpt.metadata.contains("backbone")) {
    check_backbone_shapes(ckpt.params, ckpt.metadata.at("backbone").template get<BackboneConfig>());
  }
  return ckpt;
}

}  // namespace pcgssl::nn
