#pragma once

#include <filesystem>

#include "pcgssl/app/config.hpp"

namespace pcgssl::app {

/// Settings scaled down for the synthetic corpus: a 10-patient test set,
/// 32-pair batches and a 20-epoch schedule. Everything else keeps the full-scale
/// defaults.
inline RunConfig desk_scale_config(const std::filesystem::path& dir_2022, const std::filesystem::path& dir_2016 = {}) {
  RunConfig cfg;
  cfg.data.dir_2022 = dir_2022;
  cfg.data.dir_2016 = dir_2016;
  cfg.split.test_count = 10;
  cfg.ssl.batch_pairs = 32;
  cfg.ssl.max_epochs = 20;
  cfg.ssl.schedule.total_epochs = 20;
  cfg.ssl.schedule.warmup_epochs = 2;
  return cfg;
}

}  // namespace pcgssl::app
