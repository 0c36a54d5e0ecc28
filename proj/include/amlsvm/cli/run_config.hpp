#pragma once

#include "amlsvm/coarsening.hpp"
#include "amlsvm/dataset.hpp"
#include "amlsvm/param_fit.hpp"
#include "amlsvm/refinement.hpp"
#include "amlsvm/svm.hpp"

#include "json.hpp"

#include <cstdint>

namespace amlsvm::cli {

/// Every tunable of a training run. Serialized into all run outputs.
struct RunConfig {
  FileFormat format = FileFormat::libsvm;
  CsvOptions csv;
  std::size_t kfold = 5;
  std::uint64_t seed = 1;
  std::size_t knn = kDefaultKnn;
  CoarseningConfig coarsening;
  RefinementConfig refinement;
  NudConfig nud;
  SolverOptions solver;
  double val_min_ratio = 0.5;
  double val_maj_ratio = 0.1;
  unsigned threads = 1;
  bool dump_graph = false;
  bool dump_hierarchy = false;

  /// Throws ConfigError for out-of-range values.
  void validate() const;

  [[nodiscard]] PipelineConfig pipeline() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  [[nodiscard]] static RunConfig from_json(const nlohmann::ordered_json &j);
};

}  // namespace amlsvm::cli
