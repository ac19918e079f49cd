#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/augment/pipeline.hpp"
#include "pcgssl/core/random.hpp"
#include "pcgssl/dsp/window.hpp"
#include "pcgssl/nn/backbone.hpp"
#include "pcgssl/nn/optim.hpp"
#include "pcgssl/nn/schedule.hpp"
#include "pcgssl/ssl/nt_xent.hpp"

namespace pcgssl::ssl {

struct SslConfig {
  std::size_t batch_pairs = 256;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double temperature = 0.1;
  std::size_t projection_dim = 128;
  nn::ScheduleConfig schedule;
  /// A trust coefficient of 1 lets conv weight norms grow by orders of
  /// magnitude at peak lr 0.1; 0.01 keeps the embeddings bounded.
  nn::LarsConfig lars{.trust_coefficient = 0.01};

  void validate() const {
    require(batch_pairs >= 2, Errc::InvalidConfig, "batch_pairs must be at least 2");
    require(temperature > 0.0, Errc::InvalidConfig, "temperature must be positive");
    require(max_epochs > 0 && patience > 0, Errc::InvalidConfig, "max_epochs and patience must be positive");
    require(projection_dim > 0, Errc::InvalidConfig, "projection_dim must be positive");
    require(lars.trust_coefficient > 0.0 && lars.momentum >= 0.0 && lars.momentum < 1.0 && lars.weight_decay >= 0.0,
            Errc::InvalidConfig, "LARS needs trust_coefficient > 0, momentum in [0, 1) and weight_decay >= 0");
    require(max_epochs <= schedule.total_epochs, Errc::InvalidConfig, "max_epochs exceeds the schedule length");
    schedule.validate();
  }
};

struct WindowProvenance {
  std::string patient_id;
  std::size_t recording_index = 0;
  Location location = Location::Other;
  double offset_s = 0.0;
};

/// Rows i and N + i are the two views of source window i.
struct ContrastiveBatch {
  nn::Tensor<float> views;
  std::vector<WindowProvenance> sources;

  std::size_t pairs() const { return sources.size(); }
};

/// View v (1 or 2) of window i is drawn from the stream {seed, i, v}.
inline ContrastiveBatch make_views(std::span<const Window> windows, const AugmentationPipeline& view1,
                                   const AugmentationPipeline& view2, std::uint64_t seed) {
  require(!windows.empty(), Errc::EmptyDataset, "no windows to augment");
  const std::size_t n = windows.size();
  const std::size_t len = windows.front().samples.size();
  ContrastiveBatch batch;
  batch.views = nn::Tensor<float>({2 * n, 1, len});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = windows[i];
    require(w.samples.size() == len, Errc::ShapeMismatch, "windows differ in length");
    for (std::size_t v = 0; v < 2; ++v) {
      Rng rng(derive_seed(seed, {i, v + 1}));
      const auto out = apply_pipeline(std::span<const float>(w.samples), v == 0 ? view1 : view2, rng);
      require(out.size() == len, Errc::ShapeMismatch, "augmentation changed the window length");
      std::copy(out.begin(), out.end(), batch.views.ptr() + (v * n + i) * len);
    }
    batch.sources.push_back({w.patient_id, w.recording_index, w.location, w.offset_s});
  }
  return batch;
}

template <std::floating_point T>
nn::ParameterSet<T> init_ssl_parameters(const nn::BackboneConfig& cfg, std::size_t projection_dim, std::uint64_t seed) {
  nn::ParameterSet<T> params;
  nn::init_backbone(params, cfg, seed);
  nn::init_dense(params, std::string(nn::kProjectionPrefix), cfg.embed_dim, projection_dim, seed);
  return params;
}

/// backbone -> projection -> NT-Xent on a [2N, 1, len] view tensor.
template <std::floating_point T>
nn::Var<T> contrastive_objective(nn::Tape<T>& tape, const nn::Tensor<T>& views, nn::ParameterSet<T>& params,
                                 const nn::BackboneConfig& cfg, double temperature) {
  auto x = tape.constant(views);
  auto h = nn::backbone_forward(tape, x, params, cfg);
  auto z = nn::dense(tape, h, params, std::string(nn::kProjectionPrefix));
  return nt_xent_loss(z, temperature);
}

/// Tracks a monitored loss; training should stop once `patience` consecutive
/// epochs fail to improve strictly on the best value.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records one epoch; returns true when it is the new best.
  bool update(double loss) {
    ++epochs_;
    if (epochs_ == 1 || loss < best_) {
      best_ = loss;
      best_epoch_ = epochs_;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based
  double best_loss() const { return best_; }
  std::size_t epochs() const { return epochs_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct PretrainResult {
  nn::ParameterSet<float> params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

inline void check_disjoint_patients(std::span<const Window> a, std::span<const Window> b) {
  std::set<std::string> ids;
  for (const auto& w : a) ids.insert(w.patient_id);
  for (const auto& w : b) {
    if (ids.count(w.patient_id)) fail(Errc::InvalidArgument, "patient " + w.patient_id + " appears in both train and validation windows");
  }
}

}  // namespace detail

/// Mean NT-Xent over consecutive chunks of `batch_pairs` windows, using view
/// seeds that depend only on `seed` and the chunk index. A trailing chunk of
/// fewer than two windows is skipped.
inline double contrastive_loss(std::span<const Window> windows, const AugmentationPipeline& view1,
                               const AugmentationPipeline& view2, nn::ParameterSet<float>& params,
                               const nn::BackboneConfig& bcfg, const SslConfig& cfg, std::uint64_t seed) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t start = 0, chunk = 0; start < windows.size(); start += cfg.batch_pairs, ++chunk) {
    const std::size_t n = std::min(cfg.batch_pairs, windows.size() - start);
    if (n < 2) break;
    const auto batch = make_views(windows.subspan(start, n), view1, view2, derive_seed(seed, {chunk}));
    nn::Tape<float> tape(false);
    total += static_cast<double>(n) * contrastive_objective(tape, batch.views, params, bcfg, cfg.temperature).value().item();
    counted += n;
  }
  require(counted > 0, Errc::EmptyDataset, "need at least two windows to evaluate the contrastive loss");
  return total / static_cast<double>(counted);
}

/// Contrastive pretraining with LARS on the warm-up + cosine schedule.
///
/// Each epoch shuffles the training windows, drops the incomplete final batch,
/// then scores the validation windows with augmentation seeds that are the
/// same every epoch. Training stops after `patience` epochs without
/// improvement or at max_epochs; the parameters of the best validation epoch
/// are returned.
inline PretrainResult pretrain(std::span<const Window> train, std::span<const Window> val,
                               const AugmentationPipeline& view1, const AugmentationPipeline& view2, SslConfig cfg,
                               const nn::BackboneConfig& bcfg, nn::ParameterSet<float> params, std::uint64_t seed,
                               const EpochCallback& on_epoch = {}) {
  view1.validate();
  view2.validate();
  const std::size_t steps = train.size() / cfg.batch_pairs;
  if (steps == 0) {
    fail(Errc::EmptyDataset, "need at least " + std::to_string(cfg.batch_pairs) + " training windows, have " + std::to_string(train.size()));
  }
  require(val.size() >= 2, Errc::EmptyDataset, "need at least two validation windows");
  detail::check_disjoint_patients(train, val);
  cfg.schedule.steps_per_epoch = steps;
  cfg.validate();
  nn::check_backbone_shapes(params, bcfg);

  nn::Lars<float> lars(cfg.lars);
  EarlyStopping stopper(cfg.patience);
  PretrainResult result;
  result.params = params;
  std::vector<std::size_t> order(train.size());
  std::vector<Window> batch_windows(cfg.batch_pairs);
  std::size_t global_step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng order_rng(derive_seed(seed, {tag("ssl.order"), epoch}));
    order_rng.shuffle(std::span<std::size_t>(order));

    double train_loss = 0.0;
    double lr = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      for (std::size_t j = 0; j < cfg.batch_pairs; ++j) batch_windows[j] = train[order[step * cfg.batch_pairs + j]];
      const auto batch = make_views(batch_windows, view1, view2, derive_seed(seed, {tag("ssl.train"), epoch, step}));
      params.zero_grad();
      nn::Tape<float> tape;
      auto loss = contrastive_objective(tape, batch.views, params, bcfg, cfg.temperature);
      if (!std::isfinite(loss.value().item())) {
        fail(Errc::NonFiniteGradient, "contrastive loss became non-finite at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      lr = nn::lr_at(global_step++, cfg.schedule);
      lars.step(params, lr);
      train_loss += loss.value().item();
    }

    EpochRecord record{epoch, train_loss / static_cast<double>(steps),
                       contrastive_loss(val, view1, view2, params, bcfg, cfg, derive_seed(seed, {tag("ssl.val")})), lr};
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

/// Drops the projection head and freezes every backbone tensor.
template <std::floating_point T>
nn::ParameterSet<T> freeze_backbone(nn::ParameterSet<T> params) {
  params.erase_prefix(nn::kProjectionPrefix);
  params.freeze_prefix(nn::kBackbonePrefix);
  return params;
}

inline void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) fail(Errc::Io, "cannot write " + path.string());
  out.precision(10);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << '\n';
}

}  // namespace pcgssl::ssl
