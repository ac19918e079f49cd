#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <toml.hpp>
#include <vector>

#include "pcgssl/augment/pipeline.hpp"
#include "pcgssl/classify/head.hpp"
#include "pcgssl/dsp/window.hpp"
#include "pcgssl/eval/metrics.hpp"
#include "pcgssl/nn/backbone.hpp"
#include "pcgssl/ssl/pretrain.hpp"

namespace pcgssl::app {

struct DataConfig {
  std::filesystem::path dir_2022;
  std::filesystem::path dir_2016;  // optional; empty disables the extra SSL data
};

struct SplitConfig {
  std::size_t test_count = 100;
  double val_fraction = 0.2;
};

/// Everything a run needs. Defaults are the full-scale settings.
struct RunConfig {
  DataConfig data;
  SplitConfig split;
  WindowingParams signal;
  nn::BackboneConfig backbone;
  ssl::SslConfig ssl;
  classify::HeadConfig murmur_head = classify::HeadConfig::for_task(TaskSpec::murmur());
  classify::HeadConfig outcome_head = classify::HeadConfig::for_task(TaskSpec::outcome());
  AugmentationPipeline view1 = submitted_view_pipelines().first;
  AugmentationPipeline view2 = submitted_view_pipelines().second;
  eval::EvalConfig eval;
  std::vector<AugmentationSpec> grid_augmentations = default_grid_augmentations();
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  const classify::HeadConfig& head(Task t) const { return t == Task::Murmur ? murmur_head : outcome_head; }

  static std::vector<AugmentationSpec> default_grid_augmentations() {
    std::vector<AugmentationSpec> a;
    for (double f : {250.0, 500.0, 750.0}) a.push_back(AugmentationSpec::high_pass(f));
    for (double f : {250.0, 500.0, 750.0}) a.push_back(AugmentationSpec::low_pass(f));
    a.push_back(AugmentationSpec::rewind());
    a.push_back(AugmentationSpec::invert());
    a.push_back(AugmentationSpec::random_scale());
    a.push_back(AugmentationSpec::uniform_noise(0.02));
    a.push_back(AugmentationSpec::upsample2());
    return a;
  }

  void validate() const {
    require(split.test_count > 0, Errc::InvalidConfig, "split.test_count must be positive");
    require(split.val_fraction > 0.0 && split.val_fraction < 1.0, Errc::InvalidConfig, "split.val_fraction must lie in (0, 1)");
    try {
      signal.validate();
    } catch (const Error& e) {
      throw Error(Errc::InvalidConfig, std::string("signal: ") + e.what());
    }
    require(signal.sample_rate == kTargetRate, Errc::InvalidConfig, "signal.sample_rate must be 2000");
    require(signal.window_samples() == backbone.input_len, Errc::InvalidConfig, "signal.window_s must match the backbone input length");
    backbone.validate();
    ssl.validate();
    murmur_head.validate(TaskSpec::murmur().num_classes());
    outcome_head.validate(TaskSpec::outcome().num_classes());
    view1.validate();
    view2.validate();
    for (const auto& a : grid_augmentations) a.validate();
    require(eval.murmur_weights.size() == 3 && eval.outcome_weights.size() == 2, Errc::InvalidConfig,
            "eval weights need 3 murmur and 2 outcome entries");
    for (double w : eval.murmur_weights) require(w > 0.0, Errc::InvalidConfig, "eval weights must be positive");
    for (double w : eval.outcome_weights) require(w > 0.0, Errc::InvalidConfig, "eval weights must be positive");
    for (const auto& path : {data.dir_2022, data.dir_2016}) {
      if (!path.empty() && !std::filesystem::is_directory(path)) fail(Errc::InvalidConfig, "data directory does not exist: " + path.string());
    }
  }
};

namespace detail {

/// Typed access to one TOML table that rejects keys nobody asked for.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool present() const { return table_ != nullptr; }

  const toml::node* node(const std::string& key) {
    used_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  void read(const std::string& key, double& out) {
    if (const auto* n = node(key)) {
      if (auto v = n->value<double>()) out = *v;
      else bad(key, "a number");
    }
  }

  void read(const std::string& key, std::size_t& out) {
    if (const auto* n = node(key)) {
      const auto v = n->as_integer();
      if (!v || v->get() < 0) bad(key, "a non-negative integer");
      out = static_cast<std::size_t>(v->get());
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const auto* n = node(key)) {
      if (auto v = n->value<std::string>()) out = *v;
      else bad(key, "a string");
    }
  }

  void read(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    if (!node(key)) return;
    read(key, s);
    out = s.empty() ? std::filesystem::path{} : (std::filesystem::path(s).is_absolute() ? std::filesystem::path(s) : base / s);
  }

  template <class T>
  void read(const std::string& key, std::vector<T>& out) {
    const auto* n = node(key);
    if (!n) return;
    const auto* arr = n->as_array();
    if (!arr) bad(key, "an array");
    std::vector<T> values;
    for (const auto& item : *arr) {
      if constexpr (std::is_same_v<T, double>) {
        auto v = item.value<double>();
        if (!v) bad(key, "an array of numbers");
        values.push_back(*v);
      } else {
        const auto* v = item.as_integer();
        if (!v || v->get() < 0) bad(key, "an array of non-negative integers");
        values.push_back(static_cast<T>(v->get()));
      }
    }
    out = std::move(values);
  }

  /// Fails on keys that were never read.
  void finish() const {
    if (!table_) return;
    for (auto&& [k, v] : *table_) {
      if (!used_.count(std::string(k.str()))) fail(Errc::InvalidConfig, "unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
    }
  }

  [[noreturn]] void bad(const std::string& key, const char* what) const {
    fail(Errc::InvalidConfig, "[" + name_ + "] " + key + " must be " + what);
  }

  const std::string& name() const { return name_; }

 private:
  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

inline const toml::table* subtable(const toml::table& root, const std::string& key) {
  const auto* n = root.get(key);
  if (!n) return nullptr;
  const auto* t = n->as_table();
  if (!t) fail(Errc::InvalidConfig, "'" + key + "' must be a table");
  return t;
}

inline NoiseRange parse_noise_range(const std::string& s) {
  if (s == "peak_to_peak") return NoiseRange::PeakToPeak;
  if (s == "half_width") return NoiseRange::HalfWidth;
  fail(Errc::InvalidConfig, "noise_range must be \"peak_to_peak\" or \"half_width\", got \"" + s + "\"");
}

inline std::string_view noise_range_name(NoiseRange r) { return r == NoiseRange::PeakToPeak ? "peak_to_peak" : "half_width"; }

inline AugmentationSpec parse_augmentation(const toml::table& t, const std::string& where, NoiseRange convention) {
  Section s(&t, where);
  std::string kind_name;
  s.read("kind", kind_name);
  if (kind_name.empty()) fail(Errc::InvalidConfig, where + ": augmentation needs a kind");
  AugmentationSpec spec;
  spec.kind = parse_augmentation_kind(kind_name);
  spec.noise_convention = convention;
  s.read("p", spec.probability);
  switch (spec.kind) {
    case AugmentationKind::HighPass:
    case AugmentationKind::LowPass: {
      double cutoff = 0.0;
      if (!s.node("cutoff")) fail(Errc::InvalidConfig, where + ": " + kind_name + " needs a cutoff");
      s.read("cutoff", cutoff);
      spec.cutoff_hz = cutoff;
      break;
    }
    case AugmentationKind::RandomScale: {
      std::pair<double, double> range{0.5, 2.0};
      s.read("lo", range.first);
      s.read("hi", range.second);
      spec.scale_range = range;
      break;
    }
    case AugmentationKind::UniformNoise: {
      double range = 0.02;
      s.read("range", range);
      spec.noise_range = range;
      std::string conv;
      s.read("convention", conv);
      if (!conv.empty()) spec.noise_convention = parse_noise_range(conv);
      break;
    }
    default: break;
  }
  s.finish();
  spec.validate();
  return spec;
}

inline std::vector<AugmentationSpec> parse_augmentation_list(Section& section, const std::string& key, NoiseRange convention) {
  const auto* n = section.node(key);
  const auto* arr = n->as_array();
  if (!arr) section.bad(key, "an array of inline tables");
  std::vector<AugmentationSpec> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto* t = arr->get(i)->as_table();
    if (!t) section.bad(key, "an array of inline tables");
    out.push_back(parse_augmentation(*t, section.name() + "." + key + "[" + std::to_string(i) + "]", convention));
  }
  return out;
}

inline void read_head(Section s, classify::HeadConfig& h) {
  s.read("layer_dims", h.layer_dims);
  s.read("lr", h.lr);
  s.read("batch", h.batch);
  s.read("max_epochs", h.max_epochs);
  s.read("patience", h.patience);
  s.finish();
}

inline toml::table augmentation_table(const AugmentationSpec& a) {
  toml::table t;
  t.insert("kind", std::string(to_string(a.kind)));
  if (a.cutoff_hz) t.insert("cutoff", *a.cutoff_hz);
  if (a.scale_range) {
    t.insert("lo", a.scale_range->first);
    t.insert("hi", a.scale_range->second);
  }
  if (a.noise_range) {
    t.insert("range", *a.noise_range);
    t.insert("convention", std::string(noise_range_name(a.noise_convention)));
  }
  t.insert("p", a.probability);
  t.is_inline(true);
  return t;
}

inline toml::array augmentation_array(const std::vector<AugmentationSpec>& specs) {
  toml::array arr;
  for (const auto& s : specs) arr.push_back(augmentation_table(s));
  return arr;
}

template <class T>
toml::array number_array(const std::vector<T>& values) {
  toml::array arr;
  for (auto v : values) {
    if constexpr (std::is_integral_v<T>) arr.push_back(static_cast<std::int64_t>(v));
    else arr.push_back(v);
  }
  return arr;
}

}  // namespace detail

/// Parses a TOML run configuration. Relative paths are resolved against
/// `base_dir`. Missing keys keep their defaults; unknown keys are errors.
inline RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}, bool validate = true) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config line " << e.source().begin.line << ": " << e.description();
    fail(Errc::InvalidConfig, msg.str());
  }
  RunConfig cfg;
  static const std::set<std::string> known{"data", "split", "signal", "backbone", "ssl", "heads", "augment", "eval", "grid", "run"};
  for (auto&& [k, v] : root) {
    if (!known.count(std::string(k.str()))) fail(Errc::InvalidConfig, "unknown section [" + std::string(k.str()) + "]");
  }

  detail::Section data(detail::subtable(root, "data"), "data");
  data.read("dir_2022", cfg.data.dir_2022, base_dir);
  data.read("dir_2016", cfg.data.dir_2016, base_dir);
  data.finish();

  detail::Section split(detail::subtable(root, "split"), "split");
  split.read("test_count", cfg.split.test_count);
  split.read("val_fraction", cfg.split.val_fraction);
  split.finish();

  detail::Section signal(detail::subtable(root, "signal"), "signal");
  signal.read("window_s", cfg.signal.window_s);
  signal.read("hop_s", cfg.signal.hop_s);
  signal.read("trim_s", cfg.signal.trim_s);
  signal.finish();
  cfg.backbone.input_len = cfg.signal.window_samples();

  detail::Section backbone(detail::subtable(root, "backbone"), "backbone");
  backbone.read("channels", cfg.backbone.channels);
  backbone.read("kernel", cfg.backbone.kernel);
  backbone.read("pool", cfg.backbone.pool);
  backbone.finish();
  cfg.backbone.n_blocks = cfg.backbone.channels.size();
  if (!cfg.backbone.channels.empty()) cfg.backbone.embed_dim = cfg.backbone.channels.back();

  detail::Section ssl(detail::subtable(root, "ssl"), "ssl");
  ssl.read("batch_pairs", cfg.ssl.batch_pairs);
  ssl.read("max_epochs", cfg.ssl.max_epochs);
  ssl.read("patience", cfg.ssl.patience);
  ssl.read("temperature", cfg.ssl.temperature);
  ssl.read("projection_dim", cfg.ssl.projection_dim);
  ssl.read("peak_lr", cfg.ssl.schedule.peak_lr);
  ssl.read("warmup_epochs", cfg.ssl.schedule.warmup_epochs);
  ssl.read("total_epochs", cfg.ssl.schedule.total_epochs);
  ssl.read("alpha", cfg.ssl.schedule.alpha);
  ssl.read("momentum", cfg.ssl.lars.momentum);
  ssl.read("weight_decay", cfg.ssl.lars.weight_decay);
  ssl.read("trust_coefficient", cfg.ssl.lars.trust_coefficient);
  ssl.finish();

  detail::Section heads(detail::subtable(root, "heads"), "heads");
  if (heads.present()) {
    for (const char* name : {"murmur", "outcome"}) {
      if (heads.node(name)) {
        detail::read_head(detail::Section(detail::subtable(*detail::subtable(root, "heads"), name), std::string("heads.") + name),
                          std::string(name) == "murmur" ? cfg.murmur_head : cfg.outcome_head);
      }
    }
  }
  heads.finish();

  detail::Section augment(detail::subtable(root, "augment"), "augment");
  NoiseRange convention = NoiseRange::PeakToPeak;
  std::string conv;
  augment.read("noise_range", conv);
  if (!conv.empty()) convention = detail::parse_noise_range(conv);
  for (auto* spec : {&cfg.view1.stages, &cfg.view2.stages}) {
    for (auto& s : *spec) s.noise_convention = convention;
  }
  if (augment.present()) {
    if (augment.node("view1")) cfg.view1.stages = detail::parse_augmentation_list(augment, "view1", convention);
    if (augment.node("view2")) cfg.view2.stages = detail::parse_augmentation_list(augment, "view2", convention);
  }
  augment.finish();

  detail::Section eval(detail::subtable(root, "eval"), "eval");
  eval.read("murmur_weights", cfg.eval.murmur_weights);
  eval.read("outcome_weights", cfg.eval.outcome_weights);
  if (const auto* n = eval.node("outcome_cost")) {
    const auto* rows = n->as_array();
    if (!rows || rows->size() != 2) eval.bad("outcome_cost", "a 2x2 array of numbers");
    for (std::size_t i = 0; i < 2; ++i) {
      const auto* row = rows->get(i)->as_array();
      if (!row || row->size() != 2) eval.bad("outcome_cost", "a 2x2 array of numbers");
      for (std::size_t j = 0; j < 2; ++j) {
        auto v = row->get(j)->value<double>();
        if (!v) eval.bad("outcome_cost", "a 2x2 array of numbers");
        cfg.eval.outcome_cost[i][j] = *v;
      }
    }
  }
  std::string f1;
  eval.read("f1_average", f1);
  if (f1 == "weighted") cfg.eval.f1_average = eval::F1Average::Weighted;
  else if (!f1.empty() && f1 != "macro") eval.bad("f1_average", "\"macro\" or \"weighted\"");
  eval.finish();

  detail::Section grid(detail::subtable(root, "grid"), "grid");
  for (auto& s : cfg.grid_augmentations) s.noise_convention = convention;
  if (grid.present() && grid.node("augmentations")) {
    cfg.grid_augmentations = detail::parse_augmentation_list(grid, "augmentations", convention);
  }
  grid.finish();

  detail::Section run(detail::subtable(root, "run"), "run");
  std::size_t seed = cfg.seed;
  run.read("seed", seed);
  cfg.seed = seed;
  run.read("out_dir", cfg.out_dir, base_dir);
  run.finish();

  if (validate) cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, bool validate = true) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path(), validate);
}

/// The configuration as TOML; parse_config(format_config(c)) == c.
inline std::string format_config(const RunConfig& cfg) {
  using detail::number_array;
  toml::table root;
  root.insert("data", toml::table{{"dir_2022", cfg.data.dir_2022.string()}, {"dir_2016", cfg.data.dir_2016.string()}});
  root.insert("split", toml::table{{"test_count", static_cast<std::int64_t>(cfg.split.test_count)}, {"val_fraction", cfg.split.val_fraction}});
  root.insert("signal", toml::table{{"window_s", cfg.signal.window_s}, {"hop_s", cfg.signal.hop_s}, {"trim_s", cfg.signal.trim_s}});
  root.insert("backbone", toml::table{{"channels", number_array(cfg.backbone.channels)},
                                      {"kernel", static_cast<std::int64_t>(cfg.backbone.kernel)},
                                      {"pool", static_cast<std::int64_t>(cfg.backbone.pool)}});
  root.insert("ssl", toml::table{{"batch_pairs", static_cast<std::int64_t>(cfg.ssl.batch_pairs)},
                                 {"max_epochs", static_cast<std::int64_t>(cfg.ssl.max_epochs)},
                                 {"patience", static_cast<std::int64_t>(cfg.ssl.patience)},
                                 {"temperature", cfg.ssl.temperature},
                                 {"projection_dim", static_cast<std::int64_t>(cfg.ssl.projection_dim)},
                                 {"peak_lr", cfg.ssl.schedule.peak_lr},
                                 {"warmup_epochs", static_cast<std::int64_t>(cfg.ssl.schedule.warmup_epochs)},
                                 {"total_epochs", static_cast<std::int64_t>(cfg.ssl.schedule.total_epochs)},
                                 {"alpha", cfg.ssl.schedule.alpha},
                                 {"momentum", cfg.ssl.lars.momentum},
                                 {"weight_decay", cfg.ssl.lars.weight_decay},
                                 {"trust_coefficient", cfg.ssl.lars.trust_coefficient}});
  auto head = [](const classify::HeadConfig& h) {
    return toml::table{{"layer_dims", number_array(h.layer_dims)}, {"lr", h.lr}, {"batch", static_cast<std::int64_t>(h.batch)},
                       {"max_epochs", static_cast<std::int64_t>(h.max_epochs)}, {"patience", static_cast<std::int64_t>(h.patience)}};
  };
  root.insert("heads", toml::table{{"murmur", head(cfg.murmur_head)}, {"outcome", head(cfg.outcome_head)}});
  root.insert("augment", toml::table{{"view1", detail::augmentation_array(cfg.view1.stages)},
                                     {"view2", detail::augmentation_array(cfg.view2.stages)}});
  toml::array cost;
  for (const auto& row : cfg.eval.outcome_cost) cost.push_back(toml::array{row[0], row[1]});
  root.insert("eval", toml::table{{"murmur_weights", number_array(cfg.eval.murmur_weights)},
                                  {"outcome_weights", number_array(cfg.eval.outcome_weights)},
                                  {"outcome_cost", cost},
                                  {"f1_average", cfg.eval.f1_average == eval::F1Average::Macro ? "macro" : "weighted"}});
  root.insert("grid", toml::table{{"augmentations", detail::augmentation_array(cfg.grid_augmentations)}});
  root.insert("run", toml::table{{"seed", static_cast<std::int64_t>(cfg.seed)}, {"out_dir", cfg.out_dir.string()}});
  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

}  // namespace pcgssl::app
