#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pcgssl/app/config.hpp"
#include "pcgssl/app/io.hpp"
#include "pcgssl/classify/predict.hpp"
#include "pcgssl/dataio/dataset.hpp"
#include "pcgssl/dataio/split.hpp"
#include "pcgssl/dataio/wav.hpp"
#include "pcgssl/dsp/resample.hpp"
#include "pcgssl/eval/grid.hpp"
#include "pcgssl/nn/checkpoint.hpp"
#include "pcgssl/ssl/pretrain.hpp"

namespace pcgssl::app {

using Log = std::function<void(const std::string&)>;

struct Corpus {
  std::vector<PatientRecord> patients;  // labeled 2022-style patients
  std::vector<PatientRecord> extra;     // unlabeled 2016-style recordings
  std::vector<std::string> warnings;

  const PatientRecord& patient(const std::string& id) const {
    for (const auto& p : patients) {
      if (p.patient_id == id) return p;
    }
    fail(Errc::InvalidArgument, "unknown patient " + id);
  }

  std::vector<PatientRecord> select(const std::set<std::string>& ids) const {
    std::vector<PatientRecord> out;
    for (const auto& p : patients) {
      if (ids.count(p.patient_id)) out.push_back(p);
    }
    return out;
  }
};

inline Corpus load_corpus(const RunConfig& cfg, bool with_2016) {
  require(!cfg.data.dir_2022.empty(), Errc::InvalidConfig, "data.dir_2022 is not set");
  auto load = load_dataset_2022(cfg.data.dir_2022);
  Corpus c{std::move(load.patients), {}, std::move(load.warnings)};
  require(!c.patients.empty(), Errc::EmptyDataset, "no patient files in " + cfg.data.dir_2022.string());
  if (with_2016 && !cfg.data.dir_2016.empty()) {
    auto extra = load_dataset_2016(cfg.data.dir_2016);
    c.extra = std::move(extra.patients);
    c.warnings.insert(c.warnings.end(), extra.warnings.begin(), extra.warnings.end());
  }
  return c;
}

/// Decodes, resamples and windows every recording of one patient.
inline std::vector<Window> window_patient(const PatientRecord& p, const WindowingParams& params) {
  std::vector<Window> out;
  for (std::size_t r = 0; r < p.recordings.size(); ++r) {
    const auto audio = decode_wav(p.recordings[r].audio_path);
    const auto resampled = resample_to_2k(audio.samples, audio.sample_rate);
    auto w = trim_and_window(resampled, {p.patient_id, r, p.recordings[r].location}, params);
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

inline std::vector<Window> window_patients(std::span<const PatientRecord> patients, const WindowingParams& params) {
  std::vector<Window> out;
  for (const auto& p : patients) {
    auto w = window_patient(p, params);
    std::move(w.begin(), w.end(), std::back_inserter(out));
  }
  return out;
}

/// Number of 2 kHz samples a recording of `samples` at `rate` resamples to.
inline std::size_t resampled_length(std::size_t samples, int rate) {
  if (rate == kTargetRate) return samples;
  if (rate == 2 * kTargetRate) return samples / 2;
  fail(Errc::UnsupportedRate, "cannot resample " + std::to_string(rate) + " Hz to 2000 Hz");
}

/// Windows of each split, plus the extra unlabeled set.
struct SplitWindows {
  std::vector<Window> train;
  std::vector<Window> val;
  std::vector<Window> test;
  std::vector<Window> extra;
};

inline SplitWindows window_split(const Corpus& corpus, const SplitAssignment& split, const WindowingParams& params) {
  SplitWindows out;
  for (const auto& p : corpus.patients) {
    auto w = window_patient(p, params);
    auto& target = split.test.count(p.patient_id) ? out.test : split.val.count(p.patient_id) ? out.val : out.train;
    std::move(w.begin(), w.end(), std::back_inserter(target));
  }
  out.extra = window_patients(corpus.extra, params);
  return out;
}

/// Copies `windows` with labels for `task` attached.
inline std::vector<Window> labeled_windows(std::span<const Window> windows, const Corpus& corpus, const TaskSpec& task) {
  std::map<std::string, const PatientRecord*> by_id;
  for (const auto& p : corpus.patients) by_id[p.patient_id] = &p;
  std::vector<Window> out(windows.begin(), windows.end());
  std::size_t start = 0;
  while (start < out.size()) {
    std::size_t end = start;
    while (end < out.size() && out[end].patient_id == out[start].patient_id) ++end;
    const auto it = by_id.find(out[start].patient_id);
    if (it == by_id.end()) fail(Errc::MissingLabel, "no labels for patient " + out[start].patient_id);
    propagate_labels(*it->second, std::span<Window>(out).subspan(start, end - start), task);
    start = end;
  }
  return out;
}

/// Seeds of the stages of one run, all derived from a single master seed.
struct StageSeeds {
  std::uint64_t init;
  std::uint64_t ssl;
  std::uint64_t murmur_head;
  std::uint64_t outcome_head;

  explicit StageSeeds(std::uint64_t master)
      : init(derive_seed(master, {tag("init")})),
        ssl(derive_seed(master, {tag("ssl")})),
        murmur_head(derive_seed(master, {tag("head"), tag("murmur")})),
        outcome_head(derive_seed(master, {tag("head"), tag("outcome")})) {}

  std::uint64_t head(Task t) const { return t == Task::Murmur ? murmur_head : outcome_head; }
};

inline SplitAssignment make_split(const RunConfig& cfg, const Corpus& corpus) {
  return stratified_split(corpus.patients, cfg.split.test_count, cfg.split.val_fraction, cfg.seed);
}

/// `id<TAB>recording<TAB>location<TAB>samples_2k<TAB>windows<TAB>split`.
inline std::string format_window_counts(const Corpus& corpus, const SplitAssignment& split, const WindowingParams& params) {
  std::ostringstream out;
  out << "patient_id\trecording\tlocation\tsamples_2k\twindows\tsplit\n";
  for (const auto& p : corpus.patients) {
    const char* role = split.test.count(p.patient_id) ? "test" : split.val.count(p.patient_id) ? "val" : "train";
    for (std::size_t r = 0; r < p.recordings.size(); ++r) {
      const auto n = resampled_length(p.recordings[r].samples, p.recordings[r].sample_rate);
      out << p.patient_id << '\t' << r << '\t' << to_string(p.recordings[r].location) << '\t' << n << '\t'
          << window_count(n, params) << '\t' << role << '\n';
    }
  }
  return out.str();
}

inline ssl::PretrainResult pretrain_backbone(const RunConfig& cfg, const SplitWindows& windows, const AugmentationPipeline& view1,
                                             const AugmentationPipeline& view2, std::uint64_t master, const Log& log = {}) {
  const StageSeeds seeds(master);
  std::vector<Window> train = windows.extra;
  train.insert(train.end(), windows.train.begin(), windows.train.end());
  if (log) {
    log("pretraining on " + std::to_string(train.size()) + " windows, monitoring " + std::to_string(windows.val.size()) +
        " (view1 " + view1.label() + ", view2 " + view2.label() + ")");
  }
  auto params = ssl::init_ssl_parameters<float>(cfg.backbone, cfg.ssl.projection_dim, seeds.init);
  return ssl::pretrain(train, windows.val, view1, view2, cfg.ssl, cfg.backbone, std::move(params), seeds.ssl,
                       [&](const ssl::EpochRecord& r) {
                         if (log) {
                           log("ssl epoch " + std::to_string(r.epoch) + " train " + format_number(r.train_loss) + " val " +
                               format_number(r.val_loss) + " lr " + format_number(r.lr));
                         }
                       });
}

inline nlohmann::json backbone_metadata(const RunConfig& cfg, const ssl::PretrainResult& r, const AugmentationPipeline& view1,
                                        const AugmentationPipeline& view2, std::uint64_t master) {
  return {{"kind", "backbone"}, {"backbone", cfg.backbone}, {"seed", master}, {"best_epoch", r.best_epoch},
          {"view1", view1.label()}, {"view2", view2.label()}};
}

struct TrainedHeads {
  classify::TaskHead murmur;
  classify::TaskHead outcome;
  std::vector<classify::HeadEpoch> murmur_history;
  std::vector<classify::HeadEpoch> outcome_history;

  classify::TaskHead& head(Task t) { return t == Task::Murmur ? murmur : outcome; }
};

inline TrainedHeads train_heads(const RunConfig& cfg, const Corpus& corpus, const SplitWindows& windows,
                                nn::ParameterSet<float>& backbone, std::uint64_t master, const Log& log = {}) {
  const StageSeeds seeds(master);
  TrainedHeads heads;
  for (Task t : {Task::Murmur, Task::Outcome}) {
    const auto task = TaskSpec::of(t);
    const auto train = labeled_windows(windows.train, corpus, task);
    const auto val = labeled_windows(windows.val, corpus, task);
    auto result = classify::train_head(train, val, backbone, cfg.backbone, cfg.head(t), task, seeds.head(t));
    if (log) {
      log(std::string(task.name()) + " head: " + std::to_string(result.history.size()) + " epochs, best " +
          std::to_string(result.best_epoch) + " (val loss " + format_number(result.history[result.best_epoch - 1].val_loss) + ")");
    }
    heads.head(t) = {std::move(result.params), cfg.head(t)};
    (t == Task::Murmur ? heads.murmur_history : heads.outcome_history) = std::move(result.history);
  }
  return heads;
}

inline std::string format_head_history(const std::vector<classify::HeadEpoch>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss\n";
  for (const auto& h : history) out << h.epoch << ',' << format_number(h.train_loss) << ',' << format_number(h.val_loss) << '\n';
  return out.str();
}

inline nlohmann::json head_metadata(const classify::HeadConfig& cfg, Task t) {
  return {{"kind", "head"}, {"task", std::string(to_string(t))}, {"layer_dims", cfg.layer_dims}};
}

inline classify::TaskHead load_head(const std::filesystem::path& path, Task t) {
  auto ckpt = nn::load_checkpoint<float>(path);
  require(ckpt.metadata.value("task", "") == to_string(t), Errc::InvalidConfig, path.string() + " is not a " + std::string(to_string(t)) + " head");
  classify::HeadConfig cfg = classify::HeadConfig::for_task(TaskSpec::of(t));
  cfg.layer_dims = ckpt.metadata.at("layer_dims").get<std::vector<std::size_t>>();
  cfg.validate(TaskSpec::of(t).num_classes());
  return {std::move(ckpt.params), cfg};
}

/// Scores patient predictions against the corpus labels.
inline std::vector<eval::MetricReport> evaluate_predictions(const RunConfig& cfg, const Corpus& corpus, const LabelTable& predicted) {
  require(!predicted.empty(), Errc::EmptyDataset, "no predictions to evaluate");
  std::vector<int> mt, mp, ot, op;
  for (const auto& [id, labels] : predicted) {
    const auto& p = corpus.patient(id);
    require(p.labeled(), Errc::MissingLabel, "patient " + id + " has no labels");
    mt.push_back(static_cast<int>(*p.murmur));
    mp.push_back(static_cast<int>(labels.first));
    ot.push_back(static_cast<int>(*p.outcome));
    op.push_back(static_cast<int>(labels.second));
  }
  return {eval::score_task(TaskSpec::murmur(), mt, mp, cfg.eval.murmur_weights, {}, cfg.eval.f1_average),
          eval::score_task(TaskSpec::outcome(), ot, op, cfg.eval.outcome_weights, eval::linear_cost(cfg.eval.outcome_cost),
                           cfg.eval.f1_average)};
}

inline LabelTable label_table(const std::vector<classify::PatientPrediction>& preds) {
  LabelTable t;
  for (const auto& p : preds) t[p.patient_id] = {p.murmur, p.outcome};
  return t;
}

/// Pretrain, train both heads and score the test patients, entirely in
/// memory. `windows` is shared read-only.
struct RunOutcome {
  ssl::PretrainResult ssl;
  TrainedHeads heads;
  nn::ParameterSet<float> backbone;
  std::vector<classify::PatientPrediction> predictions;
  std::vector<eval::MetricReport> metrics;
};

inline RunOutcome run_pipeline(const RunConfig& cfg, const Corpus& corpus, const SplitAssignment& split, const SplitWindows& windows,
                               const AugmentationPipeline& view1, const AugmentationPipeline& view2, std::uint64_t master,
                               const Log& log = {}) {
  RunOutcome out;
  out.ssl = pretrain_backbone(cfg, windows, view1, view2, master, log);
  out.backbone = ssl::freeze_backbone(out.ssl.params);
  out.heads = train_heads(cfg, corpus, windows, out.backbone, master, log);
  const auto test = corpus.select(split.test);
  out.predictions = classify::predict_patients(test, windows.test, out.backbone, cfg.backbone, out.heads.murmur, out.heads.outcome);
  out.metrics = evaluate_predictions(cfg, corpus, label_table(out.predictions));
  return out;
}

/// Grid runner over shared windows; each cell gets its own output directory
/// holding the backbone checkpoint.
inline eval::CellRunner make_cell_runner(const RunConfig& cfg, const Corpus& corpus, const SplitAssignment& split,
                                         const SplitWindows& windows, const std::filesystem::path& cells_dir, const Log& log = {}) {
  return [&cfg, &corpus, &split, &windows, cells_dir, log](const eval::GridCell& cell, std::uint64_t seed) {
    auto run = run_pipeline(cfg, corpus, split, windows, cell.view1, cell.view2, seed, log);
    std::string name = cell.key();
    for (auto& ch : name) {
      if (ch == '|' || ch == '/' || ch == '@') ch = '_';
    }
    const auto dir = cells_dir / name;
    std::filesystem::create_directories(dir);
    nn::save_checkpoint(dir / "backbone.ckpt", run.backbone, backbone_metadata(cfg, run.ssl, cell.view1, cell.view2, seed));
    return eval::CellOutcome{run.metrics, (dir / "backbone.ckpt").string()};
  };
}

}  // namespace pcgssl::app
