#pragma once

#include "amlsvm/cli/run_config.hpp"
#include "amlsvm/dataset.hpp"
#include "amlsvm/quality.hpp"
#include "amlsvm/svm.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace amlsvm::cli {

inline constexpr int kModelFormatVersion = 1;

struct Provenance {
  std::size_t level = 0;
  std::size_t fold = 0;
  std::string dataset_hash;  // FNV-1a 64 of the dataset file bytes, hex
  std::size_t feature_count = 0;
};

/// Everything needed to reproduce predictions of one trained fold.
struct ModelFile {
  int format_version = kModelFormatVersion;
  RunConfig config;
  NormalizationStats normalization;
  LabelMap labels;
  SvmModel model;
  Provenance provenance;
  std::map<std::string, QualityMetrics> evaluations;  // e.g. "validation", "test", "dataset"

  [[nodiscard]] nlohmann::ordered_json to_json() const;
  /// Throws DataError on a version mismatch or a malformed document.
  [[nodiscard]] static ModelFile from_json(const nlohmann::ordered_json &j);

  void save(const std::filesystem::path &path) const;
  [[nodiscard]] static ModelFile load(const std::filesystem::path &path);
};

[[nodiscard]] nlohmann::ordered_json metrics_to_json(const QualityMetrics &m);
[[nodiscard]] QualityMetrics metrics_from_json(const nlohmann::ordered_json &j);

[[nodiscard]] std::string fnv1a_hex(const std::filesystem::path &path);

}  // namespace amlsvm::cli
