// pcgssl: prepare | pretrain | train-heads | predict | evaluate | grid | config

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "pcgssl/app/config.hpp"
#include "pcgssl/app/io.hpp"
#include "pcgssl/app/workflow.hpp"

namespace fs = std::filesystem;
using namespace pcgssl;

namespace {

void log_line(const std::string& s) { std::cerr << s << '\n'; }

void report_warnings(const app::Corpus& corpus) {
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';
}

struct Context {
  app::RunConfig cfg;
  fs::path out;

  fs::path file(const char* name) const { return out / name; }
};

SplitAssignment require_split(const Context& ctx) {
  const auto path = ctx.file("split.tsv");
  if (!fs::exists(path)) fail(Errc::Io, path.string() + " not found; run `pcgssl prepare` first");
  return read_split_manifest(path);
}

nn::ParameterSet<float> require_backbone(const Context& ctx) {
  const auto path = ctx.file("backbone.ckpt");
  if (!fs::exists(path)) fail(Errc::Io, path.string() + " not found; run `pcgssl pretrain` first");
  auto ckpt = nn::load_checkpoint<float>(path);
  require(ckpt.metadata.contains("backbone") && ckpt.metadata.at("backbone").get<nn::BackboneConfig>() == ctx.cfg.backbone,
          Errc::InvalidConfig, path.string() + " was trained with a different backbone config");
  return std::move(ckpt.params);
}

void cmd_prepare(const Context& ctx) {
  const auto corpus = app::load_corpus(ctx.cfg, false);
  report_warnings(corpus);
  const auto split = app::make_split(ctx.cfg, corpus);
  fs::create_directories(ctx.out);
  write_split_manifest(ctx.file("split.tsv"), split);
  app::write_text_atomic(ctx.file("window_counts.tsv"), app::format_window_counts(corpus, split, ctx.cfg.signal));
  std::cerr << corpus.patients.size() << " patients: " << split.train.size() << " train, " << split.val.size() << " val, "
            << split.test.size() << " test\n";
}

void cmd_pretrain(const Context& ctx) {
  const auto corpus = app::load_corpus(ctx.cfg, true);
  report_warnings(corpus);
  const auto split = require_split(ctx);
  const auto windows = app::window_split(corpus, split, ctx.cfg.signal);
  auto result = app::pretrain_backbone(ctx.cfg, windows, ctx.cfg.view1, ctx.cfg.view2, ctx.cfg.seed, log_line);
  const auto backbone = ssl::freeze_backbone(result.params);
  nn::save_checkpoint(ctx.file("backbone.ckpt"), backbone, app::backbone_metadata(ctx.cfg, result, ctx.cfg.view1, ctx.cfg.view2, ctx.cfg.seed));
  ssl::write_history_csv(ctx.file("ssl_history.csv"), result.history);
  std::cerr << "best epoch " << result.best_epoch << "; wrote " << ctx.file("backbone.ckpt").string() << '\n';
}

void cmd_train_heads(const Context& ctx) {
  const auto corpus = app::load_corpus(ctx.cfg, false);
  report_warnings(corpus);
  const auto split = require_split(ctx);
  auto backbone = require_backbone(ctx);
  app::SplitWindows windows;
  windows.train = app::window_patients(corpus.select(split.train), ctx.cfg.signal);
  windows.val = app::window_patients(corpus.select(split.val), ctx.cfg.signal);
  auto heads = app::train_heads(ctx.cfg, corpus, windows, backbone, ctx.cfg.seed, log_line);
  for (Task t : {Task::Murmur, Task::Outcome}) {
    const std::string name(to_string(t));
    nn::save_checkpoint(ctx.out / ("head_" + name + ".ckpt"), heads.head(t).params, app::head_metadata(heads.head(t).config, t));
    app::write_text_atomic(ctx.out / ("head_" + name + "_history.csv"),
                           app::format_head_history(t == Task::Murmur ? heads.murmur_history : heads.outcome_history));
  }
  std::cerr << "wrote head_murmur.ckpt and head_outcome.ckpt\n";
}

void cmd_predict(const Context& ctx, const std::optional<fs::path>& input) {
  std::vector<PatientRecord> patients;
  if (input) {
    auto load = load_dataset_2022(*input);
    for (const auto& w : load.warnings) std::cerr << "warning: " << w << '\n';
    patients = std::move(load.patients);
  } else {
    const auto corpus = app::load_corpus(ctx.cfg, false);
    report_warnings(corpus);
    patients = corpus.select(require_split(ctx).test);
  }
  auto backbone = require_backbone(ctx);
  auto murmur = app::load_head(ctx.file("head_murmur.ckpt"), Task::Murmur);
  auto outcome = app::load_head(ctx.file("head_outcome.ckpt"), Task::Outcome);
  const auto windows = app::window_patients(patients, ctx.cfg.signal);
  const auto preds = classify::predict_patients(patients, windows, backbone, ctx.cfg.backbone, murmur, outcome);
  for (const auto& p : preds) {
    if (p.warning) std::cerr << "warning: " << *p.warning << '\n';
  }
  app::write_text_atomic(ctx.file("predictions.tsv"), app::format_predictions(preds));
  app::write_text_atomic(ctx.file("recording_probs.csv"), app::format_recording_probs(preds));
  std::cerr << "predicted " << preds.size() << " patients\n";
}

void cmd_evaluate(const Context& ctx, const std::optional<fs::path>& predictions) {
  const auto corpus = app::load_corpus(ctx.cfg, false);
  const auto table = app::read_predictions(predictions.value_or(ctx.file("predictions.tsv")));
  const auto reports = app::evaluate_predictions(ctx.cfg, corpus, table);
  const auto text = app::format_metrics(reports);
  app::write_text_atomic(ctx.file("metrics.csv"), text);
  std::cout << text;
}

void cmd_grid(const Context& ctx, std::size_t jobs) {
  const auto corpus = app::load_corpus(ctx.cfg, true);
  report_warnings(corpus);
  const auto split = require_split(ctx);
  const auto windows = app::window_split(corpus, split, ctx.cfg.signal);
  const auto cells = eval::grid_cells(ctx.cfg.grid_augmentations);
  const auto grid_dir = ctx.out / "grid";
  fs::create_directories(grid_dir);
  std::cerr << cells.size() << " grid cells, " << jobs << " job(s)\n";
  const auto result = eval::run_grid(cells, app::make_cell_runner(ctx.cfg, corpus, split, windows, grid_dir / "cells"),
                                     {ctx.cfg.seed, jobs, grid_dir / "ledger.jsonl"}, [](const eval::LedgerEntry& e) {
                                       std::cerr << "cell " << e.cell << ": " << e.status << (e.error.empty() ? "" : " (" + e.error + ")") << '\n';
                                     });
  eval::write_grid_csv(ctx.file("grid_results.csv"), result);
  std::cerr << result.skipped << " cell(s) reused from the ledger, " << result.failed() << " failed\n";
  if (result.failed() > 0) fail(Errc::InvalidArgument, std::to_string(result.failed()) + " grid cell(s) failed; rerun to retry them");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Contrastive self-supervised phonocardiogram classification"};
  cli.require_subcommand(1);
  cli.fallthrough();
  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::size_t jobs = 1;
  cli.add_option("--config", config_path, "TOML run configuration")->check(CLI::ExistingFile);
  cli.add_option("--seed", seed, "override run.seed");
  cli.add_option("--out", out, "override run.out_dir");
  cli.add_option("--jobs", jobs, "parallel grid cells")->check(CLI::PositiveNumber);

  auto* prepare = cli.add_subcommand("prepare", "split patients and count windows");
  auto* pretrain = cli.add_subcommand("pretrain", "contrastive pretraining of the backbone");
  auto* heads = cli.add_subcommand("train-heads", "train murmur and outcome heads on the frozen backbone");
  auto* predict = cli.add_subcommand("predict", "patient-level predictions");
  std::optional<fs::path> input;
  predict->add_option("--input", input, "directory of patient files (default: the test split)")->check(CLI::ExistingDirectory);
  auto* evaluate = cli.add_subcommand("evaluate", "score predictions against labels");
  std::optional<fs::path> predictions;
  evaluate->add_option("--predictions", predictions, "predictions TSV (default: OUT/predictions.tsv)")->check(CLI::ExistingFile);
  auto* grid = cli.add_subcommand("grid", "augmentation grid experiment");
  auto* config = cli.add_subcommand("config", "print the resolved configuration");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? 0 : 1;
  }

  try {
    Context ctx;
    ctx.cfg = config_path ? app::load_config(*config_path) : app::RunConfig{};
    if (seed) ctx.cfg.seed = *seed;
    if (out) ctx.cfg.out_dir = *out;
    ctx.out = ctx.cfg.out_dir;

    if (*config) std::cout << app::format_config(ctx.cfg);
    else if (*prepare) cmd_prepare(ctx);
    else if (*pretrain) cmd_pretrain(ctx);
    else if (*heads) cmd_train_heads(ctx);
    else if (*predict) cmd_predict(ctx, input);
    else if (*evaluate) cmd_evaluate(ctx, predictions);
    else if (*grid) cmd_grid(ctx, jobs);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::InvalidConfig ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
