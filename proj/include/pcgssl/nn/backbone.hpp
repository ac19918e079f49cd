#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/core/random.hpp"
#include "pcgssl/dsp/window.hpp"
#include "pcgssl/nn/ops.hpp"
#include "pcgssl/nn/params.hpp"

namespace pcgssl::nn {

/// Convolutional feature extractor: n_blocks of conv1d(kernel, same) -> ReLU
/// -> max-pool(pool), then a global max over time. The last block's channel
/// count is the embedding width seen by the heads.
struct BackboneConfig {
  std::size_t n_blocks = 5;
  std::vector<std::size_t> channels{16, 32, 64, 128, 128};
  std::size_t kernel = 16;
  std::size_t pool = 4;
  std::size_t input_len = kWindowLength;
  std::size_t embed_dim = 128;

  void validate() const {
    require(n_blocks > 0 && channels.size() == n_blocks, Errc::InvalidConfig, "backbone needs one channel count per block");
    require(kernel > 0 && pool > 0 && input_len > 0, Errc::InvalidConfig, "backbone kernel, pool and input length must be positive");
    require(embed_dim > 0 && channels.back() == embed_dim, Errc::InvalidConfig, "last block width must equal embed_dim");
    for (std::size_t c : channels) require(c > 0, Errc::InvalidConfig, "channel counts must be positive");
    require(time_lengths().back() > 0, Errc::InvalidConfig, "input too short for the pooling chain");
  }

  /// Time length entering each block followed by the final pooled length.
  std::vector<std::size_t> time_lengths() const {
    std::vector<std::size_t> lengths{input_len};
    for (std::size_t i = 0; i < n_blocks; ++i) lengths.push_back(lengths.back() / pool);
    return lengths;
  }

  bool operator==(const BackboneConfig&) const = default;
};

inline std::string block_prefix(std::size_t block) { return "block" + std::to_string(block + 1) + "."; }

inline constexpr std::string_view kBackbonePrefix = "block";
inline constexpr std::string_view kProjectionPrefix = "projection.";

template <std::floating_point T>
void init_backbone(ParameterSet<T>& params, const BackboneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, {tag("init.backbone")}));
  std::size_t in = 1;
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    const std::size_t out = cfg.channels[i];
    params.add(block_prefix(i) + "conv.weight", he_uniform<T>({out, in, cfg.kernel}, in * cfg.kernel, rng));
    params.add(block_prefix(i) + "conv.bias", Tensor<T>({out}));
    in = out;
  }
}

/// Adds `prefix`weight [out, in] (He-uniform) and `prefix`bias [out] (zeros).
template <std::floating_point T>
void init_dense(ParameterSet<T>& params, const std::string& prefix, std::size_t in, std::size_t out, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {tag("init.dense"), tag(prefix)}));
  params.add(prefix + "weight", he_uniform<T>({out, in}, in, rng));
  params.add(prefix + "bias", Tensor<T>({out}));
}

/// Checks that `params` holds backbone tensors with the shapes `cfg` implies.
template <std::floating_point T>
void check_backbone_shapes(const ParameterSet<T>& params, const BackboneConfig& cfg) {
  std::size_t in = 1;
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    const auto w = block_prefix(i) + "conv.weight";
    const auto b = block_prefix(i) + "conv.bias";
    require(params.contains(w) && params.contains(b), Errc::ShapeMismatch, "missing backbone parameters for " + block_prefix(i));
    const Shape ws{cfg.channels[i], in, cfg.kernel};
    require(params.at(w).shape() == ws, Errc::ShapeMismatch,
            w + " has shape " + shape_string(params.at(w).shape()) + ", expected " + shape_string(ws));
    require(params.at(b).shape() == Shape{cfg.channels[i]}, Errc::ShapeMismatch, b + " has the wrong shape");
    in = cfg.channels[i];
  }
}

template <std::floating_point T>
Var<T> dense(Tape<T>& tape, const Var<T>& x, ParameterSet<T>& params, const std::string& prefix) {
  auto& w = params.at(prefix + "weight");
  auto& b = params.at(prefix + "bias");
  return linear(x, tape.parameter(w, !params.is_frozen(prefix + "weight")), tape.parameter(b, !params.is_frozen(prefix + "bias")));
}

/// x: [batch, 1, input_len] -> [batch, embed_dim].
template <std::floating_point T>
Var<T> backbone_forward(Tape<T>& tape, const Var<T>& x, ParameterSet<T>& params, const BackboneConfig& cfg) {
  const auto& xs = x.shape();
  if (xs.size() != 3 || xs[1] != 1 || xs[2] != cfg.input_len) {
    fail(Errc::ShapeMismatch, "backbone input " + shape_string(xs) + ", expected [batch, 1, " + std::to_string(cfg.input_len) + "]");
  }
  Var<T> h = x;
  for (std::size_t i = 0; i < cfg.n_blocks; ++i) {
    const auto wp = block_prefix(i) + "conv.weight";
    const auto bp = block_prefix(i) + "conv.bias";
    auto w = tape.parameter(params.at(wp), !params.is_frozen(wp));
    auto b = tape.parameter(params.at(bp), !params.is_frozen(bp));
    h = max_pool1d(relu(conv1d(h, w, b)), cfg.pool);
  }
  return global_max_pool(h);
}

/// Stacks windows into a [batch, 1, len] tensor.
template <std::floating_point T>
Tensor<T> stack_windows(std::span<const Window> windows) {
  require(!windows.empty(), Errc::EmptyDataset, "no windows to stack");
  const std::size_t len = windows.front().samples.size();
  Tensor<T> x({windows.size(), 1, len});
  for (std::size_t i = 0; i < windows.size(); ++i) {
    require(windows[i].samples.size() == len, Errc::ShapeMismatch, "windows differ in length");
    std::copy(windows[i].samples.begin(), windows[i].samples.end(), x.ptr() + i * len);
  }
  return x;
}

/// Backbone features for every window, computed without recording gradients.
template <std::floating_point T>
Tensor<T> embed_windows(std::span<const Window> windows, ParameterSet<T>& params, const BackboneConfig& cfg,
                        std::size_t batch = 32) {
  Tensor<T> out({windows.size(), cfg.embed_dim});
  for (std::size_t start = 0; start < windows.size(); start += batch) {
    const std::size_t n = std::min(batch, windows.size() - start);
    Tape<T> tape(false);
    auto x = tape.constant(stack_windows<T>(windows.subspan(start, n)));
    const auto& z = backbone_forward(tape, x, params, cfg).value();
    std::copy(z.data().begin(), z.data().end(), out.ptr() + start * cfg.embed_dim);
  }
  return out;
}

}  // namespace pcgssl::nn
