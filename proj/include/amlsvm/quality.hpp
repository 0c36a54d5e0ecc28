#pragma once

#include <cstddef>

namespace amlsvm {

/// Confusion counts with the positive (minority) class as "positive".
struct QualityMetrics {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double acc = 0.0;
  double sn = 0.0;  // sensitivity, TP / (TP + FN)
  double sp = 0.0;  // specificity, TN / (TN + FP)
  double gmean = 0.0;

  /// Fills the rates from the counts; 0/0 rates are 0.
  [[nodiscard]] static QualityMetrics from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn);

  friend bool operator==(const QualityMetrics &, const QualityMetrics &) = default;
};

}  // namespace amlsvm
