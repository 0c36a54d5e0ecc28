#pragma once

#include "amlsvm/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace amlsvm {

enum class FileFormat { libsvm, csv };

struct CsvOptions {
  bool has_header = false;
  /// Zero-based label column; negative values count from the end (-1 = last column).
  /// std::nullopt means the file carries no labels.
  std::optional<int> label_column = 0;
};

/// Raw file contents before labels are mapped to {+1, -1}.
struct RawTable {
  Matrix points;
  std::vector<std::string> labels;  // empty when the file is unlabeled
  [[nodiscard]] bool labeled() const noexcept { return !labels.empty(); }
};

/// Which raw label string is the positive (minority) class.
struct LabelMap {
  std::string positive;
  std::string negative;
  friend bool operator==(const LabelMap &, const LabelMap &) = default;
};

/// Points, +/-1 labels, per-point volumes and stable original ids.
struct LabeledDataset {
  Matrix points;
  std::vector<int> labels;
  std::vector<double> volumes;
  std::vector<std::size_t> ids;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return points.cols(); }
  [[nodiscard]] std::size_t count(int label) const noexcept;

  /// Rows in the given order; ids, labels and volumes travel with them.
  [[nodiscard]] LabeledDataset subset(std::span<const std::size_t> rows) const;
  /// Row indices (not ids) of every point with the given label.
  [[nodiscard]] std::vector<std::size_t> indices_of(int label) const;

  /// Throws DataError when an invariant is broken.
  void validate() const;
};

/// Builds a dataset with unit volumes and ids 0..n-1.
[[nodiscard]] LabeledDataset make_dataset(Matrix points, std::vector<int> labels);

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  friend bool operator==(const NormalizationStats &, const NormalizationStats &) = default;
};

struct SplitPlan {
  std::size_t fold_count = 0;
  std::vector<std::size_t> fold_of;  // indexed by row of the planned dataset
  std::uint64_t seed = 0;

  [[nodiscard]] std::vector<std::size_t> test_rows(std::size_t fold) const;
  [[nodiscard]] std::vector<std::size_t> train_rows(std::size_t fold) const;
};

struct ValidationSample {
  std::vector<std::size_t> rows;  // row indices into the finest training set, ascending
  double minority_ratio = 0.5;
  double majority_ratio = 0.1;
};

// --- ingestion -------------------------------------------------------------------------

/// libsvm sparse text: "label idx:val idx:val ..." with 1-based indices. `min_dim` pads the
/// feature count (sparse files may not mention trailing zero features).
[[nodiscard]] RawTable parse_libsvm(std::istream &in, std::size_t min_dim = 0);
[[nodiscard]] RawTable parse_csv(std::istream &in, const CsvOptions &options);
[[nodiscard]] RawTable load_table(const std::filesystem::path &path, FileFormat format,
                                  const CsvOptions &csv = {}, std::size_t min_dim = 0);

/// Minority label becomes +1. On equal counts the label seen first in the file wins.
[[nodiscard]] LabelMap infer_label_map(const RawTable &table);
[[nodiscard]] LabeledDataset to_labeled(RawTable table, const LabelMap &map);

/// load_table + infer_label_map + to_labeled.
[[nodiscard]] LabeledDataset load_dataset(const std::filesystem::path &path, FileFormat format,
                                          const CsvOptions &csv = {}, LabelMap *map_out = nullptr);

// --- preprocessing ---------------------------------------------------------------------

/// Z-score with population (1/n) standard deviation; constant features keep stddev 1.
[[nodiscard]] NormalizationStats compute_normalization(const Matrix &points);
void apply_normalization(Matrix &points, const NormalizationStats &stats);
[[nodiscard]] std::pair<LabeledDataset, NormalizationStats> zscore_normalize(LabeledDataset ds);

/// Stratified k-fold assignment; per class the fold sizes differ by at most one.
[[nodiscard]] SplitPlan make_split_plan(const LabeledDataset &ds, std::size_t k, std::uint64_t seed);

/// Draws ceil(r_min * n+) minority and ceil(r_maj * n-) majority rows without replacement.
[[nodiscard]] ValidationSample sample_validation(const LabeledDataset &train, double r_min, double r_maj,
                                                 std::uint64_t seed);

}  // namespace amlsvm
