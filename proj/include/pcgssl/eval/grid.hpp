#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pcgssl/augment/pipeline.hpp"
#include "pcgssl/core/random.hpp"
#include "pcgssl/eval/metrics.hpp"

namespace pcgssl::eval {

struct GridCell {
  AugmentationPipeline view1;
  AugmentationPipeline view2;

  std::string key() const { return view1.label() + "|" + view2.label(); }
};

/// Each augmentation alone in view 1 against an identity view 2, then every
/// ordered pair including the diagonal: A + A^2 cells.
inline std::vector<GridCell> grid_cells(std::span<const AugmentationSpec> augmentations) {
  std::vector<GridCell> cells;
  for (const auto& a : augmentations) cells.push_back({AugmentationPipeline{{a}}, AugmentationPipeline{}});
  for (const auto& a : augmentations) {
    for (const auto& b : augmentations) cells.push_back({AugmentationPipeline{{a}}, AugmentationPipeline{{b}}});
  }
  return cells;
}

/// The seed of a cell depends only on the master seed and the cell key.
inline std::uint64_t cell_seed(std::uint64_t master, const GridCell& cell) {
  return derive_seed(master, {tag("grid"), tag(cell.key())});
}

struct CellOutcome {
  std::vector<MetricReport> reports;
  std::string checkpoint;
};

using CellRunner = std::function<CellOutcome(const GridCell&, std::uint64_t seed)>;

struct LedgerEntry {
  std::string cell;
  std::string view1;
  std::string view2;
  std::uint64_t seed = 0;
  std::string status;  // "ok" or "failed"
  std::vector<MetricReport> metrics;
  std::string checkpoint;
  std::string error;

  bool ok() const { return status == "ok"; }
};

inline nlohmann::json to_json(const LedgerEntry& e) {
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& m : e.metrics) {
    nlohmann::json j{{"task", m.task}, {"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"weighted_accuracy", m.weighted_accuracy}};
    j["cost"] = m.cost ? nlohmann::json(*m.cost) : nlohmann::json(nullptr);
    metrics.push_back(std::move(j));
  }
  return {{"cell", e.cell}, {"view1", e.view1}, {"view2", e.view2}, {"seed", e.seed}, {"status", e.status},
          {"metrics", metrics}, {"checkpoint", e.checkpoint}, {"error", e.error}};
}

inline LedgerEntry ledger_entry_from_json(const nlohmann::json& j) {
  LedgerEntry e;
  e.cell = j.at("cell").get<std::string>();
  e.view1 = j.value("view1", "");
  e.view2 = j.value("view2", "");
  e.seed = j.at("seed").get<std::uint64_t>();
  e.status = j.at("status").get<std::string>();
  e.checkpoint = j.value("checkpoint", "");
  e.error = j.value("error", "");
  for (const auto& m : j.value("metrics", nlohmann::json::array())) {
    MetricReport r;
    r.task = m.at("task").get<std::string>();
    r.accuracy = m.at("accuracy").get<double>();
    r.macro_f1 = m.at("macro_f1").get<double>();
    r.weighted_accuracy = m.at("weighted_accuracy").get<double>();
    if (!m.at("cost").is_null()) r.cost = m.at("cost").get<double>();
    e.metrics.push_back(std::move(r));
  }
  return e;
}

/// Append-only JSON-lines file. Appends take an exclusive flock so several
/// processes can share one ledger.
class GridLedger {
 public:
  explicit GridLedger(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const { return path_; }

  /// Latest entry per cell. A torn trailing line is ignored.
  std::map<std::string, LedgerEntry> read() const {
    std::map<std::string, LedgerEntry> out;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      auto e = ledger_entry_from_json(j);
      out[e.cell] = std::move(e);
    }
    return out;
  }

  void append(const LedgerEntry& entry) {
    const std::string line = to_json(entry).dump() + "\n";
    std::lock_guard lock(mutex_);
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    const int fd = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
    if (fd < 0) fail(Errc::Io, "cannot open ledger " + path_.string());
    ::flock(fd, LOCK_EX);
    // Terminate a torn tail left by an interrupted writer so this entry
    // starts on its own line.
    std::string data = line;
    const auto size = ::lseek(fd, 0, SEEK_END);
    char last = '\n';
    if (size > 0 && ::pread(fd, &last, 1, size - 1) == 1 && last != '\n') data.insert(data.begin(), '\n');
    std::size_t written = 0;
    bool ok = true;
    while (written < data.size()) {
      const auto n = ::write(fd, data.data() + written, data.size() - written);
      if (n <= 0) {
        ok = false;
        break;
      }
      written += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (!ok) fail(Errc::Io, "short write to ledger " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

struct GridOptions {
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path ledger;
};

struct GridResult {
  std::vector<GridCell> cells;
  std::vector<LedgerEntry> entries;  // parallel to cells
  std::size_t skipped = 0;

  std::size_t failed() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.ok() ? 0 : 1;
    return n;
  }
};

using CellCallback = std::function<void(const LedgerEntry&)>;

/// Runs every cell not already completed in the ledger. A cell that throws is
/// recorded as failed and retried on the next run.
inline GridResult run_grid(const std::vector<GridCell>& cells, const CellRunner& runner, const GridOptions& options,
                           const CellCallback& on_cell = {}) {
  require(options.jobs > 0, Errc::InvalidArgument, "jobs must be positive");
  GridLedger ledger(options.ledger);
  const auto done = ledger.read();
  GridResult result;
  result.cells = cells;
  result.entries.resize(cells.size());

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto seed = cell_seed(options.master_seed, cells[i]);
    const auto it = done.find(cells[i].key());
    if (it != done.end() && it->second.ok() && it->second.seed == seed) {
      result.entries[i] = it->second;
      ++result.skipped;
    } else {
      pending.push_back(i);
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < pending.size(); k = next++) {
      const std::size_t i = pending[k];
      const auto& cell = cells[i];
      LedgerEntry e;
      e.cell = cell.key();
      e.view1 = cell.view1.label();
      e.view2 = cell.view2.label();
      e.seed = cell_seed(options.master_seed, cell);
      try {
        auto outcome = runner(cell, e.seed);
        e.status = "ok";
        e.metrics = std::move(outcome.reports);
        e.checkpoint = std::move(outcome.checkpoint);
      } catch (const std::exception& ex) {
        e.status = "failed";
        e.error = ex.what();
      }
      ledger.append(e);
      result.entries[i] = e;
      if (on_cell) {
        std::lock_guard lock(callback_mutex);
        on_cell(e);
      }
    }
  };
  const std::size_t threads = std::min(options.jobs, pending.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return result;
}

/// One row per completed cell and task.
inline void write_grid_csv(const std::filesystem::path& path, const GridResult& result) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(Errc::Io, "cannot write " + tmp);
    out.precision(10);
    out << "view1_aug,view2_aug,task,accuracy,macro_f1,weighted_accuracy,cost\n";
    for (const auto& e : result.entries) {
      if (!e.ok()) continue;
      for (const auto& m : e.metrics) {
        out << e.view1 << ',' << e.view2 << ',' << m.task << ',' << m.accuracy << ',' << m.macro_f1 << ','
            << m.weighted_accuracy << ',';
        if (m.cost) out << *m.cost;
        out << '\n';
      }
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pcgssl::eval
