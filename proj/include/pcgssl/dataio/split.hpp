#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pcgssl/core/error.hpp"
#include "pcgssl/core/random.hpp"
#include "pcgssl/dataio/records.hpp"

namespace pcgssl {

enum class SplitRole { Train = 0, Val = 1, Test = 2 };

constexpr std::string_view to_string(SplitRole r) noexcept {
  switch (r) {
    case SplitRole::Train: return "train";
    case SplitRole::Val: return "val";
    case SplitRole::Test: return "test";
  }
  return "train";
}

struct SplitAssignment {
  std::set<std::string> train;
  std::set<std::string> val;
  std::set<std::string> test;
  std::uint64_t seed = 0;

  const std::set<std::string>& members(SplitRole role) const {
    return role == SplitRole::Train ? train : role == SplitRole::Val ? val : test;
  }

  bool operator==(const SplitAssignment&) const = default;
};

namespace detail {

// Rounds a table of non-negative quotas to integers, one row per stratum and
// one column per split, so that every cell is the floor or ceiling of its
// quota (or its exact value when integral, plus at most one), every row sums
// to its stratum size and every column hits its target. The leftover units
// after flooring are routed with a small max-flow: source -> row -> column ->
// sink, first only through cells with a fractional residual.
class ControlledRounding {
 public:
  static std::vector<std::array<std::size_t, 3>> round(const std::vector<std::array<double, 3>>& quotas,
                                                        const std::vector<std::size_t>& row_totals,
                                                        const std::array<std::size_t, 3>& col_totals) {
    const std::size_t rows = quotas.size();
    std::vector<std::array<std::size_t, 3>> cells(rows);
    std::vector<std::array<double, 3>> residual(rows);
    std::vector<long> row_need(rows);
    std::array<long, 3> col_need{};
    for (std::size_t c = 0; c < 3; ++c) col_need[c] = static_cast<long>(col_totals[c]);
    for (std::size_t r = 0; r < rows; ++r) {
      long used = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double q = std::max(0.0, quotas[r][c]);
        const auto f = static_cast<std::size_t>(std::floor(q + 1e-9));
        cells[r][c] = f;
        residual[r][c] = std::max(0.0, q - static_cast<double>(f));
        used += static_cast<long>(f);
        col_need[c] -= static_cast<long>(f);
      }
      row_need[r] = static_cast<long>(row_totals[r]) - used;
    }

    // capacity[r][c] is 0/1: whether row r may still hand a unit to column c.
    std::vector<std::array<int, 3>> given(rows, {0, 0, 0});
    for (int pass = 0; pass < 2; ++pass) {
      bool progress = true;
      while (progress) {
        progress = false;
        for (std::size_t r = 0; r < rows; ++r) {
          while (row_need[r] > 0) {
            std::vector<char> seen_cols(3, 0);
            if (!augment(r, pass, residual, given, col_need, seen_cols)) break;
            --row_need[r];
            progress = true;
          }
        }
      }
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (row_need[r] != 0) fail(Errc::StratumTooSmall, "cannot apportion stratum across splits");
      for (std::size_t c = 0; c < 3; ++c) cells[r][c] += static_cast<std::size_t>(given[r][c]);
    }
    return cells;
  }

 private:
  static bool allowed(int pass, double residual) { return pass == 1 || residual > 1e-9; }

  // Finds an augmenting path starting at row r: either a column with spare
  // demand, or a column whose unit can be moved from another row to a
  // different column (alternating path through the bipartite graph).
  static bool augment(std::size_t r, int pass, const std::vector<std::array<double, 3>>& residual,
                      std::vector<std::array<int, 3>>& given, std::array<long, 3>& col_need,
                      std::vector<char>& seen_cols) {
    std::array<std::size_t, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return residual[r][a] > residual[r][b]; });
    for (std::size_t c : order) {
      if (given[r][c] || !allowed(pass, residual[r][c]) || seen_cols[c]) continue;
      seen_cols[c] = 1;
      if (col_need[c] > 0) {
        given[r][c] = 1;
        --col_need[c];
        return true;
      }
      for (std::size_t other = 0; other < given.size(); ++other) {
        if (other == r || !given[other][c]) continue;
        given[other][c] = 0;
        if (augment(other, pass, residual, given, col_need, seen_cols)) {
          given[r][c] = 1;
          return true;
        }
        given[other][c] = 1;
      }
    }
    return false;
  }
};

}  // namespace detail

/// Patient-level split stratified on the joint (murmur, outcome) label.
///
/// `test_count` labeled patients go to test; the remaining labeled patients
/// are divided train/val with `val_fraction` going to val. Per stratum, each
/// split receives the floor or ceiling of its proportional share. Unlabeled
/// patients are always assigned to train.
inline SplitAssignment stratified_split(const std::vector<PatientRecord>& patients, std::size_t test_count,
                                        double val_fraction, std::uint64_t seed) {
  require(val_fraction > 0.0 && val_fraction < 1.0, Errc::InvalidArgument, "val_fraction must lie in (0, 1)");

  SplitAssignment split;
  split.seed = seed;
  std::map<std::pair<int, int>, std::vector<std::string>> strata;
  std::set<std::string> seen;
  for (const auto& p : patients) {
    require(seen.insert(p.patient_id).second, Errc::InvalidArgument, "duplicate patient id " + p.patient_id);
    if (p.labeled()) {
      strata[{static_cast<int>(*p.murmur), static_cast<int>(*p.outcome)}].push_back(p.patient_id);
    } else {
      split.train.insert(p.patient_id);
    }
  }
  std::size_t labeled = 0;
  for (const auto& [key, ids] : strata) labeled += ids.size();
  require(test_count < labeled, Errc::InvalidArgument, "test_count must be smaller than the labeled patient count");

  const double n = static_cast<double>(labeled);
  const double frac_test = static_cast<double>(test_count) / n;
  const double frac_val = (1.0 - frac_test) * val_fraction;
  const auto val_total = static_cast<std::size_t>(std::llround(static_cast<double>(labeled - test_count) * val_fraction));
  const std::array<std::size_t, 3> col_totals{labeled - test_count - val_total, val_total, test_count};

  std::vector<std::array<double, 3>> quotas;
  std::vector<std::size_t> sizes;
  for (const auto& [key, ids] : strata) {
    const double s = static_cast<double>(ids.size());
    quotas.push_back({s * (1.0 - frac_test - frac_val), s * frac_val, s * frac_test});
    sizes.push_back(ids.size());
  }
  const auto counts = detail::ControlledRounding::round(quotas, sizes, col_totals);

  std::size_t index = 0;
  for (auto& [key, ids] : strata) {
    const auto& c = counts[index];
    if (c[0] == 0) {
      fail(Errc::StratumTooSmall, "stratum (murmur=" + std::string(to_string(Murmur(key.first))) + ", outcome=" +
                                      std::string(to_string(Outcome(key.second))) + ") of size " +
                                      std::to_string(ids.size()) + " leaves no training patient");
    }
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, {tag("split"), index}));
    rng.shuffle(std::span<std::string>(ids));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto& target = i < c[2] ? split.test : i < c[2] + c[1] ? split.val : split.train;
      target.insert(ids[i]);
    }
    ++index;
  }
  return split;
}

/// Writes `patient_id<TAB>split` lines, grouped by split then sorted by id.
inline void write_split_manifest(const std::filesystem::path& path, const SplitAssignment& split) {
  std::ostringstream out;
  for (SplitRole role : {SplitRole::Train, SplitRole::Val, SplitRole::Test}) {
    for (const auto& id : split.members(role)) out << id << '\t' << to_string(role) << '\n';
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) fail(Errc::Io, "cannot write " + tmp.string());
    file << out.str();
  }
  std::filesystem::rename(tmp, path);
}

inline SplitAssignment read_split_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open split manifest " + path.string());
  SplitAssignment split;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail(Errc::InvalidConfig, path.string() + ":" + std::to_string(lineno) + ": expected 'id<TAB>split'");
    const auto id = line.substr(0, tab);
    const auto role = line.substr(tab + 1);
    if (role == "train") split.train.insert(id);
    else if (role == "val") split.val.insert(id);
    else if (role == "test") split.test.insert(id);
    else fail(Errc::InvalidConfig, path.string() + ":" + std::to_string(lineno) + ": unknown split '" + role + "'");
  }
  return split;
}

}  // namespace pcgssl
