#include "amlsvm/recovery.hpp"

#include "amlsvm/knn_graph.hpp"
#include "amlsvm/model_eval.hpp"

#include <algorithm>
#include <stdexcept>

namespace amlsvm {

std::vector<std::size_t> augmentation_rows(const LabeledDataset &level_data, std::span<const std::size_t> training_rows,
                                           const LabeledDataset &validation, std::span<const int> predicted,
                                           std::size_t p, std::size_t n) {
  const std::vector<std::size_t> positives = level_data.indices_of(1);
  const std::vector<std::size_t> negatives = level_data.indices_of(-1);
  std::vector<char> in_training(level_data.size(), 0);
  for (std::size_t r : training_rows) in_training[r] = 1;

  std::vector<char> chosen(level_data.size(), 0);
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (predicted[i] == validation.labels[i]) continue;
    const auto x = validation.points.row(i);
    for (std::size_t r : nearest_rows(level_data.points, positives, x, p)) chosen[r] = 1;
    for (std::size_t r : nearest_rows(level_data.points, negatives, x, n)) chosen[r] = 1;
  }
  std::vector<std::size_t> added;
  for (std::size_t r = 0; r < chosen.size(); ++r)
    if (chosen[r] && !in_training[r]) added.push_back(r);
  return added;
}

RecoveryOutcome detect_and_recover(const LabeledDataset &level_data, std::span<const std::size_t> training_rows,
                                   const SvmModel &current, const LabeledDataset &validation, RecoveryState &state,
                                   std::optional<LogParams> center, const NudRun &run) {
  RecoveryOutcome outcome{current, std::vector<std::size_t>(training_rows.begin(), training_rows.end()), {}, {}};
  const double q_current = current.quality.gmean;
  outcome.event.q_before = q_current;
  outcome.event.q_after = q_current;

  if (q_current > state.q_max) {
    state.q_max = q_current;
    return outcome;
  }
  if (state.q_max - q_current <= state.delta) return outcome;

  outcome.event.triggered = true;
  const Predictions predicted = predict(current, validation.points);
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (predicted.labels[i] == validation.labels[i]) continue;
    (predicted.labels[i] > 0 ? outcome.event.false_positives : outcome.event.false_negatives) += 1;
  }
  // A G-mean below a previously reached value implies at least one validation error.
  if (outcome.event.false_positives + outcome.event.false_negatives == 0)
    throw std::logic_error("quality drop detected without misclassified validation points");

  const std::vector<std::size_t> added =
      augmentation_rows(level_data, training_rows, validation, predicted.labels, state.positive_neighbors,
                        state.negative_neighbors);
  outcome.event.added = added.size();
  if (added.empty()) return outcome;

  std::vector<std::size_t> augmented(training_rows.begin(), training_rows.end());
  augmented.insert(augmented.end(), added.begin(), added.end());
  std::sort(augmented.begin(), augmented.end());

  NudResult search = nud_search(level_data.subset(augmented), validation, center, run);
  outcome.event.models_trained = search.trained;
  const SvmModel &candidate = search.best_model();
  outcome.event.q_after = candidate.quality.gmean;
  if (candidate.quality.gmean > q_current) {
    outcome.event.accepted = true;
    outcome.model = candidate;
    outcome.training_rows = std::move(augmented);
  }
  outcome.search = std::move(search);
  return outcome;
}

}  // namespace amlsvm
