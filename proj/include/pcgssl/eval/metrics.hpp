#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcgssl/classify/task.hpp"
#include "pcgssl/core/error.hpp"

namespace pcgssl::eval {

/// Rows are the true class, columns the predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
    require(classes > 0, Errc::InvalidArgument, "a confusion matrix needs at least one class");
  }

  ConfusionMatrix(std::size_t classes, std::span<const int> truth, std::span<const int> predicted) : ConfusionMatrix(classes) {
    require(truth.size() == predicted.size(), Errc::ShapeMismatch, "truth and prediction lists differ in length");
    for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], predicted[i]);
  }

  void add(int truth, int predicted, std::uint64_t count = 1) { counts_[index(truth, predicted)] += count; }

  std::uint64_t at(int truth, int predicted) const { return counts_[index(truth, predicted)]; }
  std::size_t classes() const { return classes_; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }
  std::uint64_t row_sum(int truth) const {
    std::uint64_t t = 0;
    for (std::size_t j = 0; j < classes_; ++j) t += at(truth, static_cast<int>(j));
    return t;
  }
  std::uint64_t col_sum(int predicted) const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < classes_; ++i) t += at(static_cast<int>(i), predicted);
    return t;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index(int truth, int predicted) const {
    require(truth >= 0 && predicted >= 0 && static_cast<std::size_t>(truth) < classes_ && static_cast<std::size_t>(predicted) < classes_,
            Errc::InvalidArgument, "class index outside the confusion matrix");
    return static_cast<std::size_t>(truth) * classes_ + static_cast<std::size_t>(predicted);
  }

  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

inline double accuracy(const ConfusionMatrix& m) {
  const auto total = m.total();
  require(total > 0, Errc::EmptyMatrix, "accuracy of an empty confusion matrix");
  std::uint64_t hit = 0;
  for (std::size_t i = 0; i < m.classes(); ++i) hit += m.at(static_cast<int>(i), static_cast<int>(i));
  return static_cast<double>(hit) / static_cast<double>(total);
}

/// Unweighted mean of per-class F1. A class that is neither present nor
/// predicted scores 0.
inline double macro_f1(const ConfusionMatrix& m) {
  require(m.total() > 0, Errc::EmptyMatrix, "F1 of an empty confusion matrix");
  double sum = 0.0;
  for (std::size_t k = 0; k < m.classes(); ++k) {
    const int c = static_cast<int>(k);
    const double tp = static_cast<double>(m.at(c, c));
    const double denom = static_cast<double>(m.row_sum(c) + m.col_sum(c));
    if (denom > 0.0) sum += 2.0 * tp / denom;
  }
  return sum / static_cast<double>(m.classes());
}

enum class F1Average { Macro, Weighted };

/// Macro, or the per-class F1 weighted by true-class support.
inline double f1_score(const ConfusionMatrix& m, F1Average average) {
  if (average == F1Average::Macro) return macro_f1(m);
  const double total = static_cast<double>(m.total());
  require(total > 0.0, Errc::EmptyMatrix, "F1 of an empty confusion matrix");
  double sum = 0.0;
  for (std::size_t k = 0; k < m.classes(); ++k) {
    const int c = static_cast<int>(k);
    const double denom = static_cast<double>(m.row_sum(c) + m.col_sum(c));
    if (denom > 0.0) sum += static_cast<double>(m.row_sum(c)) / total * 2.0 * static_cast<double>(m.at(c, c)) / denom;
  }
  return sum;
}

/// sum_i w_i m_ii / sum_i w_i rowsum_i.
inline double weighted_accuracy(const ConfusionMatrix& m, std::span<const double> weights) {
  require(weights.size() == m.classes(), Errc::InvalidArgument, "one weight per class is required");
  for (double w : weights) require(w > 0.0 && std::isfinite(w), Errc::InvalidArgument, "class weights must be positive");
  require(m.total() > 0, Errc::EmptyMatrix, "weighted accuracy of an empty confusion matrix");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < m.classes(); ++k) {
    const int c = static_cast<int>(k);
    num += weights[k] * static_cast<double>(m.at(c, c));
    den += weights[k] * static_cast<double>(m.row_sum(c));
  }
  return num / den;
}

using CostMatrix = std::array<std::array<double, 2>, 2>;

inline constexpr CostMatrix kDefaultOutcomeCost{{{0.0, 5.0}, {1.0, 0.0}}};

/// sum_ij cost[i][j] m[i][j] for a two-class matrix.
inline double outcome_cost(const ConfusionMatrix& m, const CostMatrix& cost = kDefaultOutcomeCost) {
  require(m.classes() == 2, Errc::InvalidArgument, "outcome cost needs a 2x2 matrix");
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      require(std::isfinite(cost[i][j]), Errc::InvalidArgument, "cost entries must be finite");
      total += cost[i][j] * static_cast<double>(m.at(i, j));
    }
  }
  return total;
}

/// A cost over full truth / prediction lists, so non-linear scoring rules can
/// be plugged in.
using CostFunction = std::function<double(std::span<const int> truth, std::span<const int> predicted)>;

inline CostFunction linear_cost(CostMatrix cost = kDefaultOutcomeCost) {
  return [cost](std::span<const int> truth, std::span<const int> predicted) {
    return outcome_cost(ConfusionMatrix(2, truth, predicted), cost);
  };
}

struct MetricReport {
  std::string task;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double weighted_accuracy = 0.0;
  std::optional<double> cost;

  bool operator==(const MetricReport&) const = default;
};

struct EvalConfig {
  std::vector<double> murmur_weights{5.0, 3.0, 1.0};
  std::vector<double> outcome_weights{5.0, 1.0};
  CostMatrix outcome_cost = kDefaultOutcomeCost;
  F1Average f1_average = F1Average::Macro;
};

/// Scores one task. `cost` is applied only when given.
inline MetricReport score_task(const TaskSpec& task, std::span<const int> truth, std::span<const int> predicted,
                               std::span<const double> weights, const CostFunction& cost = {},
                               F1Average f1_average = F1Average::Macro) {
  ConfusionMatrix m(task.num_classes(), truth, predicted);
  MetricReport r;
  r.task = std::string(task.name());
  r.accuracy = accuracy(m);
  r.macro_f1 = f1_score(m, f1_average);
  r.weighted_accuracy = weighted_accuracy(m, weights);
  if (cost) r.cost = cost(truth, predicted);
  return r;
}

}  // namespace pcgssl::eval
