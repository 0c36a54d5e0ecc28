#pragma once

#include "amlsvm/coarsening.hpp"
#include "amlsvm/dataset.hpp"
#include "amlsvm/param_fit.hpp"
#include "amlsvm/recovery.hpp"
#include "amlsvm/svm.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace amlsvm {

struct RefinementConfig {
  std::size_t theta = 3000;  // early-stopping training-set size
  double delta = 0.05;       // significant G-mean drop
  std::size_t positive_neighbors = 1;
  std::size_t negative_neighbors = 1;
  bool recovery = true;

  /// theta >= 2M, 0 < delta < 1.
  void validate(std::size_t coarsest_size) const;
};

struct PipelineConfig {
  NudConfig nud;
  RefinementConfig refinement;
  SolverOptions solver;
  unsigned threads = 1;
};

/// Outcome of one level of the uncoarsening walk.
struct LevelSolution {
  std::size_t level = 0;  // 1 = finest
  std::size_t level_positive = 0;  // full level size per class
  std::size_t level_negative = 0;
  std::vector<std::size_t> training_rows;  // rows of hierarchy.level_data(level - 1)
  std::size_t training_positive = 0;
  std::size_t training_negative = 0;
  bool early_stop = false;
  std::optional<SvmModel> best;  // absent when early-stopped
  NudResult search;
  RecoveryEvent recovery;
  double q_max_after = 0.0;

  [[nodiscard]] bool trained() const noexcept { return best.has_value(); }
  [[nodiscard]] double quality() const noexcept { return best ? best->quality.gmean : 0.0; }
};

/// Union of the aggregates of every coarse support vector. Ids are level-local
/// (positives first) on both sides; `positive` and `negative` map the fine level of each
/// class onto the coarse level.
[[nodiscard]] std::vector<std::size_t> disaggregate(std::span<const std::size_t> coarse_sv_ids,
                                                    const InterpolationOperator &positive,
                                                    const InterpolationOperator &negative);

/// Trains the coarsest level with an uncentered NUD search.
[[nodiscard]] LevelSolution solve_coarsest(const LevelHierarchy &h, const LabeledDataset &validation,
                                           RecoveryState &state, const PipelineConfig &cfg);

/// One uncoarsening step onto `level_index` (0 = finest) from the solution one level coarser.
[[nodiscard]] LevelSolution refine_level(const LevelHierarchy &h, std::size_t level_index, const LevelSolution &coarser,
                                         const LabeledDataset &validation, RecoveryState &state,
                                         const PipelineConfig &cfg);

struct PipelineResult {
  SvmModel final_model;
  std::vector<LevelSolution> levels;  // coarsest first, in visiting order
  std::optional<std::size_t> early_stop_level;

  [[nodiscard]] std::size_t final_level() const noexcept { return static_cast<std::size_t>(final_model.level); }
};

/// Coarsest solve, then refinement level by level towards the finest level until the
/// hierarchy is exhausted or the size guard trips. The final model is select_best over the
/// level bests.
[[nodiscard]] PipelineResult run_pipeline(const LevelHierarchy &h, const LabeledDataset &validation,
                                          const PipelineConfig &cfg);

}  // namespace amlsvm
