#pragma once

#include "amlsvm/cli/model_file.hpp"
#include "amlsvm/cli/run_config.hpp"
#include "amlsvm/coarsening.hpp"
#include "amlsvm/dataset.hpp"
#include "amlsvm/quality.hpp"
#include "amlsvm/refinement.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace amlsvm::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2, kTrainingError = 3 };

/// One cross-validation fold carried through normalization, graph construction, coarsening
/// and the multilevel pipeline.
struct FoldOutcome {
  std::size_t fold = 0;
  NormalizationStats normalization;
  LevelHierarchy hierarchy;
  PipelineResult pipeline;
  QualityMetrics test;
  std::size_t train_size = 0;  // training fold including the validation sample
  std::size_t validation_size = 0;
  std::size_t test_size = 0;
  std::vector<std::size_t> finest_ids;      // level-local finest index -> dataset id
  std::vector<std::size_t> validation_ids;  // dataset ids
  std::vector<std::size_t> test_ids;        // dataset ids
};

/// Seed used for the validation sample of a fold.
[[nodiscard]] std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

[[nodiscard]] FoldOutcome run_fold(const LabeledDataset &data, const SplitPlan &plan, std::size_t fold,
                                   const RunConfig &cfg);

/// JSON-lines records for a fold: one "level" record per visited level, one "candidate"
/// record per NUD candidate, and a closing "final" record.
[[nodiscard]] std::vector<nlohmann::ordered_json> trace_records(const FoldOutcome &outcome);

struct TrainSummary {
  std::vector<FoldOutcome> folds;
  QualityMetrics mean;  // fold means of ACC/SN/SP/Gmean (counts summed)
  double seconds = 0.0;
  nlohmann::ordered_json document;  // what summary.json contains
};

/// Cross-validated training. Writes, under `out_dir`: config.json, summary.json,
/// timing.json and fold_<k>/{model.json, trace.jsonl} (plus hierarchy/graph dumps when the
/// config asks for them).
TrainSummary cmd_train(const std::filesystem::path &dataset, const RunConfig &cfg, const std::filesystem::path &out_dir,
                       std::ostream &log);

struct PredictOptions {
  std::optional<FileFormat> format;  // default: the model's training format
  std::optional<CsvOptions> csv;
};

struct PredictResult {
  Predictions predictions;
  std::optional<QualityMetrics> metrics;  // when the file carries labels
};

/// Applies a saved model to a dataset. Writes "label,decision_value" rows to `out` when given.
PredictResult cmd_predict(const std::filesystem::path &model_path, const std::filesystem::path &dataset,
                          const PredictOptions &options, const std::filesystem::path *out, std::ostream &log);

struct ReportRow {
  std::size_t level = 0;
  std::size_t fold = 0;
  bool trained = false;
  double gmean = 0.0;
  double sn = 0.0;
  double sp = 0.0;
  std::size_t nsv = 0;
  bool recovered = false;
  bool early_stop = false;
};

struct Report {
  std::vector<ReportRow> rows;
  std::string table_csv;    // level,fold,Gmean,SN,SP,nSV,recovered,early_stop
  std::string summary_csv;  // per level aggregates
};

/// Reads JSON-lines traces and builds the per-level quality table. Throws DataError naming
/// the offending file on malformed input.
[[nodiscard]] Report cmd_report(const std::vector<std::filesystem::path> &traces);

/// Entry point behind the `amlsvm` executable.
int run_cli(int argc, char **argv, std::ostream &out, std::ostream &err);

}  // namespace amlsvm::cli
