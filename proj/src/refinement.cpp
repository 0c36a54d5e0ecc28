#include "amlsvm/refinement.hpp"

#include "amlsvm/error.hpp"
#include "amlsvm/model_eval.hpp"

#include <algorithm>
#include <numeric>

namespace amlsvm {

void RefinementConfig::validate(std::size_t coarsest_size) const {
  if (theta < 2 * coarsest_size) throw ConfigError("theta must be at least 2M");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

std::vector<std::size_t> disaggregate(std::span<const std::size_t> coarse_sv_ids, const InterpolationOperator &positive,
                                      const InterpolationOperator &negative) {
  const std::size_t coarse_split = positive.coarse_count();
  const std::size_t fine_split = positive.fine_count();
  std::vector<char> member(fine_split + negative.fine_count(), 0);
  for (std::size_t id : coarse_sv_ids) {
    if (id < coarse_split) {
      for (std::size_t j : positive.aggregate(id)) member[j] = 1;
    } else {
      for (std::size_t j : negative.aggregate(id - coarse_split)) member[fine_split + j] = 1;
    }
  }
  std::vector<std::size_t> fine;
  for (std::size_t j = 0; j < member.size(); ++j)
    if (member[j]) fine.push_back(j);
  return fine;
}

namespace {

void count_classes(LevelSolution &sol, const LabeledDataset &data) {
  sol.training_positive = 0;
  sol.training_negative = 0;
  for (std::size_t r : sol.training_rows) (data.labels[r] > 0 ? sol.training_positive : sol.training_negative) += 1;
}

NudRun make_run(const PipelineConfig &cfg, std::size_t level) {
  return NudRun{cfg.nud, cfg.solver, cfg.threads, static_cast<int>(level)};
}

}  // namespace

LevelSolution solve_coarsest(const LevelHierarchy &h, const LabeledDataset &validation, RecoveryState &state,
                             const PipelineConfig &cfg) {
  const std::size_t index = h.level_count() - 1;
  const LabeledDataset data = h.level_data(index);
  LevelSolution sol;
  sol.level = index + 1;
  sol.level_positive = h.positive[index].size();
  sol.level_negative = h.negative[index].size();
  sol.training_rows.resize(data.size());
  std::iota(sol.training_rows.begin(), sol.training_rows.end(), std::size_t{0});
  count_classes(sol, data);
  sol.search = nud_search(data, validation, std::nullopt, make_run(cfg, sol.level));
  sol.best = sol.search.best_model();
  state.q_max = sol.best->quality.gmean;
  sol.q_max_after = state.q_max;
  return sol;
}

LevelSolution refine_level(const LevelHierarchy &h, std::size_t level_index, const LevelSolution &coarser,
                           const LabeledDataset &validation, RecoveryState &state, const PipelineConfig &cfg) {
  if (!coarser.best) throw TrainingError("cannot refine from a level without a model");
  const ClassLevel &pos = h.positive[level_index];
  const ClassLevel &neg = h.negative[level_index];
  const LabeledDataset data = h.level_data(level_index);

  LevelSolution sol;
  sol.level = level_index + 1;
  sol.level_positive = pos.size();
  sol.level_negative = neg.size();
  sol.training_rows = disaggregate(coarser.best->sv_ids, *pos.to_coarser, *neg.to_coarser);

  // One-sided disaggregation: fall back to the whole level for the missing class.
  const bool has_pos = std::any_of(sol.training_rows.begin(), sol.training_rows.end(),
                                   [&](std::size_t r) { return r < pos.size(); });
  const bool has_neg = std::any_of(sol.training_rows.begin(), sol.training_rows.end(),
                                   [&](std::size_t r) { return r >= pos.size(); });
  if (!has_pos || !has_neg) {
    const std::size_t first = has_pos ? pos.size() : 0;
    const std::size_t last = has_pos ? data.size() : pos.size();
    for (std::size_t r = first; r < last; ++r) sol.training_rows.push_back(r);
    std::sort(sol.training_rows.begin(), sol.training_rows.end());
  }
  count_classes(sol, data);

  if (sol.training_rows.size() >= cfg.refinement.theta) {
    sol.early_stop = true;
    sol.q_max_after = state.q_max;
    return sol;
  }

  const LogParams center = LogParams::from_params(coarser.best->params);
  const NudRun run = make_run(cfg, sol.level);
  sol.search = nud_search(data.subset(sol.training_rows), validation, center, run);
  SvmModel level_best = sol.search.best_model();

  if (cfg.refinement.recovery) {
    RecoveryOutcome outcome = detect_and_recover(data, sol.training_rows, level_best, validation, state, center, run);
    sol.recovery = outcome.event;
    if (outcome.event.accepted) {
      level_best = std::move(outcome.model);
      sol.training_rows = std::move(outcome.training_rows);
      count_classes(sol, data);
    }
  }
  state.observe(level_best.quality.gmean);
  sol.q_max_after = state.q_max;
  sol.best = std::move(level_best);
  return sol;
}

PipelineResult run_pipeline(const LevelHierarchy &h, const LabeledDataset &validation, const PipelineConfig &cfg) {
  if (h.level_count() == 0) throw TrainingError("empty hierarchy");
  RecoveryState state;
  state.delta = cfg.refinement.delta;
  state.positive_neighbors = cfg.refinement.positive_neighbors;
  state.negative_neighbors = cfg.refinement.negative_neighbors;

  PipelineResult result;
  result.levels.push_back(solve_coarsest(h, validation, state, cfg));
  for (std::size_t index = h.level_count() - 1; index-- > 0;) {
    LevelSolution sol = refine_level(h, index, result.levels.back(), validation, state, cfg);
    const bool stop = sol.early_stop;
    if (stop) result.early_stop_level = sol.level;
    result.levels.push_back(std::move(sol));
    if (stop) break;
  }

  std::vector<SvmModel> bests;
  for (const LevelSolution &s : result.levels)
    if (s.best) bests.push_back(*s.best);
  result.final_model = bests[select_best(bests)];
  return result;
}

}  // namespace amlsvm
