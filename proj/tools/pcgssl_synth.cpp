// pcgssl-synth: writes a synthetic corpus and a matching config.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pcgssl/app/config.hpp"
#include "pcgssl/app/desk.hpp"
#include "pcgssl/app/synthetic.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App cli{"Synthetic phonocardiogram corpus"};
  fs::path out;
  pcgssl::app::SyntheticOptions opt;
  cli.add_option("--out", out, "output directory")->required();
  cli.add_option("--patients", opt.patients, "labeled patients");
  cli.add_option("--recordings-2016", opt.recordings_2016, "unlabeled extra recordings");
  cli.add_option("--duration", opt.duration_s, "seconds per recording");
  cli.add_option("--seed", opt.seed, "generator seed");
  cli.add_option("--present-fraction", opt.present_fraction, "share of murmur-present patients");
  std::size_t test_count = 10;
  cli.add_option("--test-count", test_count, "test patients in the written config");
  CLI11_PARSE(cli, argc, argv);

  try {
    const auto dir_2022 = out / "2022";
    const auto dir_2016 = out / "2016";
    const auto patients = pcgssl::app::write_synthetic_corpus(dir_2022, dir_2016, opt);
    auto cfg = pcgssl::app::desk_scale_config("2022", opt.recordings_2016 > 0 ? fs::path("2016") : fs::path{});
    cfg.split.test_count = test_count;
    cfg.out_dir = "run";
    std::ofstream(out / "config.toml") << pcgssl::app::format_config(cfg);
    std::cerr << "wrote " << patients.size() << " patients to " << dir_2022.string() << " and " << (out / "config.toml").string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
