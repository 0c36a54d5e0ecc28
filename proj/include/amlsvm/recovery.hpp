#pragma once

#include "amlsvm/dataset.hpp"
#include "amlsvm/param_fit.hpp"
#include "amlsvm/svm.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace amlsvm {

struct RecoveryState {
  double q_max = 0.0;  // best level quality seen so far; only ever raised
  double delta = 0.05;
  std::size_t positive_neighbors = 1;  // p
  std::size_t negative_neighbors = 1;  // n

  void observe(double quality) noexcept {
    if (quality > q_max) q_max = quality;
  }
};

struct RecoveryEvent {
  bool triggered = false;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t added = 0;  // |A|
  double q_before = 0.0;
  double q_after = 0.0;
  bool accepted = false;
  std::size_t models_trained = 0;
};

struct RecoveryOutcome {
  SvmModel model;
  std::vector<std::size_t> training_rows;  // rows of the level data the returned model was trained on
  RecoveryEvent event;
  std::optional<NudResult> search;  // the augmented NUD run, when triggered
};

/// Nearest p positive and n negative rows of `level_data` for every misclassified validation
/// point, minus rows already in `training_rows`. Returned ascending and distinct.
[[nodiscard]] std::vector<std::size_t> augmentation_rows(const LabeledDataset &level_data,
                                                         std::span<const std::size_t> training_rows,
                                                         const LabeledDataset &validation,
                                                         std::span<const int> predicted, std::size_t p,
                                                         std::size_t n);

/// Quality-drop detection and recovery for one level.
///
/// `current` must carry its validation metrics. When its G-mean exceeds the running maximum
/// the maximum is raised and nothing else happens. When it trails the maximum by more than
/// delta, misclassified validation points pull their nearest neighbors (per class, from the
/// whole level) into the training set and the level is re-searched with NUD around `center`.
/// The augmented model is kept only if its validation G-mean is strictly higher.
[[nodiscard]] RecoveryOutcome detect_and_recover(const LabeledDataset &level_data,
                                                 std::span<const std::size_t> training_rows, const SvmModel &current,
                                                 const LabeledDataset &validation, RecoveryState &state,
                                                 std::optional<LogParams> center, const NudRun &run);

}  // namespace amlsvm
