#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/classify/task.hpp"
#include "pcgssl/core/random.hpp"
#include "pcgssl/nn/backbone.hpp"
#include "pcgssl/nn/optim.hpp"
#include "pcgssl/ssl/pretrain.hpp"

namespace pcgssl::classify {

/// Output widths of the three dense layers; the input width is the backbone
/// embedding size and the last entry must equal the class count.
struct HeadConfig {
  std::vector<std::size_t> layer_dims{128, 64, 3};
  double lr = 1e-4;
  std::size_t batch = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;

  static HeadConfig for_task(const TaskSpec& task) {
    HeadConfig cfg;
    cfg.layer_dims.back() = task.num_classes();
    return cfg;
  }

  void validate(std::size_t classes) const {
    require(layer_dims.size() == 3, Errc::InvalidConfig, "the head has exactly three dense layers");
    for (auto d : layer_dims) require(d > 0, Errc::InvalidConfig, "layer widths must be positive");
    require(layer_dims.back() == classes, Errc::InvalidConfig,
            "head output width " + std::to_string(layer_dims.back()) + " != class count " + std::to_string(classes));
    require(lr > 0.0, Errc::InvalidConfig, "head lr must be positive");
    require(batch > 0 && max_epochs > 0 && patience > 0, Errc::InvalidConfig, "batch, max_epochs and patience must be positive");
  }
};

inline std::string layer_prefix(std::size_t i) { return "head.fc" + std::to_string(i + 1) + "."; }

template <std::floating_point T>
nn::ParameterSet<T> init_head(std::size_t in_dim, const HeadConfig& cfg, std::uint64_t seed) {
  nn::ParameterSet<T> params;
  std::size_t in = in_dim;
  for (std::size_t i = 0; i < cfg.layer_dims.size(); ++i) {
    nn::init_dense(params, layer_prefix(i), in, cfg.layer_dims[i], seed);
    in = cfg.layer_dims[i];
  }
  return params;
}

/// features [batch, in] -> logits [batch, C].
template <std::floating_point T>
nn::Var<T> head_forward(nn::Tape<T>& tape, const nn::Var<T>& features, nn::ParameterSet<T>& params, const HeadConfig& cfg) {
  nn::Var<T> h = features;
  for (std::size_t i = 0; i < cfg.layer_dims.size(); ++i) {
    h = nn::dense(tape, h, params, layer_prefix(i));
    if (i + 1 < cfg.layer_dims.size()) h = nn::relu(h);
  }
  return h;
}

template <std::floating_point T>
nn::Tensor<T> gather_rows(const nn::Tensor<T>& x, std::span<const std::size_t> rows) {
  const std::size_t cols = x.size() / x.dim(0);
  nn::Tensor<T> out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.ptr() + rows[i] * cols, cols, out.ptr() + i * cols);
  }
  return out;
}

/// Softmax probabilities for each feature row.
template <std::floating_point T>
std::vector<std::vector<double>> predict_probs(const nn::Tensor<T>& features, nn::ParameterSet<T>& head, const HeadConfig& cfg) {
  std::vector<std::vector<double>> out;
  if (features.size() == 0) return out;
  nn::Tape<T> tape(false);
  const auto& logits = head_forward(tape, tape.constant(features), head, cfg).value();
  const std::size_t rows = logits.dim(0), c = logits.dim(1);
  const auto probs = nn::softmax_rows(std::span<const T>(logits.data()), rows, c);
  for (std::size_t r = 0; r < rows; ++r) out.emplace_back(probs.begin() + r * c, probs.begin() + (r + 1) * c);
  return out;
}

template <std::floating_point T>
double mean_cross_entropy(const nn::Tensor<T>& features, std::span<const int> labels, nn::ParameterSet<T>& head,
                          const HeadConfig& cfg) {
  nn::Tape<T> tape(false);
  auto logits = head_forward(tape, tape.constant(features), head, cfg);
  return nn::softmax_cross_entropy(logits, labels).value().item();
}

struct HeadEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct HeadTrainResult {
  nn::ParameterSet<float> params;
  std::vector<HeadEpoch> history;
  std::size_t best_epoch = 0;
};

using HeadEpochCallback = std::function<void(const HeadEpoch&)>;

/// Adam on cross-entropy over fixed feature rows, with early stopping on the
/// validation loss and restore of the best epoch. The last batch of an epoch
/// may be short.
inline HeadTrainResult train_head_on_features(const nn::Tensor<float>& train_x, std::span<const int> train_y,
                                              const nn::Tensor<float>& val_x, std::span<const int> val_y,
                                              const HeadConfig& cfg, std::size_t classes, std::uint64_t seed,
                                              const HeadEpochCallback& on_epoch = {}) {
  cfg.validate(classes);
  require(train_y.size() > 0, Errc::EmptyDataset, "no training windows for the head");
  require(val_y.size() > 0, Errc::EmptyDataset, "no validation windows for the head");
  require(train_x.rank() == 2 && train_x.dim(0) == train_y.size(), Errc::ShapeMismatch, "train features and labels disagree");
  require(val_x.rank() == 2 && val_x.dim(0) == val_y.size() && val_x.dim(1) == train_x.dim(1), Errc::ShapeMismatch,
          "validation features and labels disagree");
  for (auto ys : {train_y, val_y}) {
    for (int y : ys) require(y >= 0 && static_cast<std::size_t>(y) < classes, Errc::MissingLabel, "label outside the class range");
  }

  auto params = init_head<float>(train_x.dim(1), cfg, derive_seed(seed, {tag("head.init")}));
  nn::Adam<float> adam(nn::AdamConfig{.lr = cfg.lr});
  ssl::EarlyStopping stopper(cfg.patience);
  HeadTrainResult result;
  result.params = params;

  const std::size_t n = train_y.size();
  std::vector<std::size_t> order(n);
  std::vector<int> batch_y;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, {tag("head.order"), epoch}));
    rng.shuffle(std::span<std::size_t>(order));

    double train_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t b = std::min(cfg.batch, n - start);
      const std::span<const std::size_t> rows(order.data() + start, b);
      batch_y.resize(b);
      for (std::size_t i = 0; i < b; ++i) batch_y[i] = train_y[rows[i]];
      params.zero_grad();
      nn::Tape<float> tape;
      auto loss = nn::softmax_cross_entropy(head_forward(tape, tape.constant(gather_rows(train_x, rows)), params, cfg),
                                            std::span<const int>(batch_y));
      tape.backward(loss);
      adam.step(params);
      train_loss += loss.value().item() * static_cast<double>(b);
    }

    HeadEpoch record{epoch, train_loss / static_cast<double>(n), mean_cross_entropy(val_x, val_y, params, cfg)};
    result.history.push_back(record);
    if (stopper.update(record.val_loss)) {
      result.params = params;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(record);
    if (stopper.should_stop()) break;
  }
  for (auto& [path, t] : result.params) t.drop_grad();
  return result;
}

inline std::vector<int> window_labels(std::span<const Window> windows, std::size_t classes) {
  std::vector<int> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) {
    require(w.label.has_value(), Errc::MissingLabel, "window of patient " + w.patient_id + " has no label");
    require(*w.label >= 0 && static_cast<std::size_t>(*w.label) < classes, Errc::MissingLabel, "window label outside the class range");
    labels.push_back(*w.label);
  }
  return labels;
}

/// Every backbone tensor must be frozen before a head is trained on it.
template <std::floating_point T>
void require_frozen_backbone(const nn::ParameterSet<T>& backbone, const nn::BackboneConfig& bcfg) {
  nn::check_backbone_shapes(backbone, bcfg);
  for (const auto& [path, t] : backbone) {
    if (path.starts_with(nn::kBackbonePrefix) && !backbone.is_frozen(path)) {
      fail(Errc::UnfrozenBackbone, "backbone tensor " + path + " is trainable");
    }
  }
}

/// Trains a head for `task` on windows embedded by a frozen backbone.
inline HeadTrainResult train_head(std::span<const Window> train, std::span<const Window> val, nn::ParameterSet<float>& backbone,
                                  const nn::BackboneConfig& bcfg, const HeadConfig& cfg, const TaskSpec& task,
                                  std::uint64_t seed, const HeadEpochCallback& on_epoch = {}) {
  require_frozen_backbone(backbone, bcfg);
  require(!train.empty(), Errc::EmptyDataset, "no training windows for the head");
  require(!val.empty(), Errc::EmptyDataset, "no validation windows for the head");
  const auto train_y = window_labels(train, task.num_classes());
  const auto val_y = window_labels(val, task.num_classes());
  const auto train_x = nn::embed_windows(train, backbone, bcfg);
  const auto val_x = nn::embed_windows(val, backbone, bcfg);
  return train_head_on_features(train_x, train_y, val_x, val_y, cfg, task.num_classes(), seed, on_epoch);
}

}  // namespace pcgssl::classify
