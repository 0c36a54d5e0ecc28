#include "amlsvm/error.hpp"
#include "amlsvm/model_eval.hpp"
#include "amlsvm/refinement.hpp"

#include "doctest.h"
#include "drop_instance.hpp"
#include "synthetic.hpp"

#include <algorithm>
#include <random>

using namespace amlsvm;

namespace {

struct Problem {
  LevelHierarchy hierarchy;
  LabeledDataset validation;
};

Problem twonorm_problem(std::size_t n_per_class, std::size_t m, std::uint64_t seed) {
  const RawTable t = synthetic::twonorm(seed, n_per_class, n_per_class);
  LabeledDataset all = to_labeled(t, LabelMap{"1", "2"});
  const ValidationSample s = sample_validation(all, 0.2, 0.2, seed);
  std::vector<char> held(all.size(), 0);
  for (std::size_t r : s.rows) held[r] = 1;
  std::vector<std::size_t> pos, neg;
  for (std::size_t r = 0; r < all.size(); ++r)
    if (!held[r]) (all.labels[r] > 0 ? pos : neg).push_back(r);
  const Matrix p = all.points.select_rows(pos);
  const Matrix n = all.points.select_rows(neg);
  CoarseningConfig cfg;
  cfg.coarsest_size = m;
  const std::vector<double> vp(pos.size(), 1.0), vn(neg.size(), 1.0);
  return {build_hierarchy(p, build_knn_graph(p, vp), n, build_knn_graph(n, vn), cfg), all.subset(s.rows)};
}

PipelineConfig small_pipeline(std::size_t m) {
  PipelineConfig cfg;
  cfg.refinement.theta = 10 * m;
  return cfg;
}

bool same_model(const SvmModel &a, const SvmModel &b) {
  return a.params == b.params && a.coefficients == b.coefficients && a.bias == b.bias && a.level == b.level &&
         a.sv_ids == b.sv_ids;
}

bool evaluated(const NudResult &r, LogParams p) {
  return std::any_of(r.candidates.begin(), r.candidates.end(), [&](const CandidateRecord &c) {
    return std::abs(c.point.log2c - p.log2c) <= 1e-9 && std::abs(c.point.log2g - p.log2g) <= 1e-9;
  });
}

}  // namespace

TEST_CASE("config validation") {
  RefinementConfig cfg;
  CHECK_NOTHROW(cfg.validate(300));
  cfg.theta = 599;
  CHECK_THROWS_AS(cfg.validate(300), ConfigError);
  RefinementConfig bad_delta;
  bad_delta.delta = 0.0;
  CHECK_THROWS_AS(bad_delta.validate(300), ConfigError);
}

TEST_CASE("disaggregation examples") {
  const InterpolationOperator path(1, {{{0, 1.0}}, {{0, 1.0}}, {{0, 1.0}}});
  const InterpolationOperator neg = InterpolationOperator::identity(2);
  CHECK(disaggregate({}, path, neg).empty());
  const std::vector<std::size_t> seed_aggregate{0};
  CHECK(disaggregate(seed_aggregate, path, neg) == std::vector<std::size_t>{0, 1, 2});
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(disaggregate(all, path, neg) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  const std::vector<std::size_t> negative_only{2};
  CHECK(disaggregate(negative_only, path, neg) == std::vector<std::size_t>{4});

  const InterpolationOperator fractional(2, {{{0, 1.0}}, {{0, 0.5}, {1, 0.5}}, {{1, 1.0}}});
  const std::vector<std::size_t> second{1};
  CHECK(disaggregate(second, fractional, neg) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("a one-level hierarchy is a single NUD-tuned SVM") {
  const Problem p = twonorm_problem(120, 300, 4);
  REQUIRE(p.hierarchy.level_count() == 1);
  const PipelineConfig cfg = small_pipeline(300);
  const PipelineResult r = run_pipeline(p.hierarchy, p.validation, cfg);
  REQUIRE(r.levels.size() == 1);
  const NudResult direct = nud_search(p.hierarchy.level_data(0), p.validation, std::nullopt, NudRun{cfg.nud, {}, 1, 1});
  CHECK(same_model(r.final_model, direct.best_model()));
  CHECK_FALSE(r.early_stop_level.has_value());
}

TEST_CASE("pipeline: inherited centers, provenance and determinism") {
  const Problem p = twonorm_problem(400, 40, 9);
  REQUIRE(p.hierarchy.level_count() >= 3);
  const PipelineConfig cfg = small_pipeline(40);
  const PipelineResult r = run_pipeline(p.hierarchy, p.validation, cfg);

  CHECK(r.levels.front().level == p.hierarchy.level_count());
  for (std::size_t i = 1; i < r.levels.size(); ++i) {
    const LevelSolution &s = r.levels[i];
    CHECK(s.level + 1 == r.levels[i - 1].level);
    if (!s.trained()) continue;
    CHECK(evaluated(s.search, LogParams::from_params(r.levels[i - 1].best->params)));
    CHECK(s.search.trained <= 13);
    CHECK(s.training_positive + s.training_negative == s.training_rows.size());
    CHECK(s.training_rows.size() < cfg.refinement.theta);
  }
  const bool matches_a_level = std::any_of(r.levels.begin(), r.levels.end(), [&](const LevelSolution &s) {
    return s.best && same_model(*s.best, r.final_model);
  });
  CHECK(matches_a_level);

  double q_max = 0.0;
  for (const LevelSolution &s : r.levels) {
    CHECK(s.q_max_after >= q_max);
    q_max = s.q_max_after;
  }

  const PipelineResult again = run_pipeline(p.hierarchy, p.validation, cfg);
  CHECK(same_model(again.final_model, r.final_model));
  REQUIRE(again.levels.size() == r.levels.size());
  for (std::size_t i = 0; i < r.levels.size(); ++i) CHECK(again.levels[i].training_rows == r.levels[i].training_rows);
}

TEST_CASE("theta = 2M + 1 stops at the first refinement") {
  const Problem p = twonorm_problem(300, 20, 1);
  REQUIRE(p.hierarchy.level_count() >= 3);
  PipelineConfig cfg;
  cfg.refinement.theta = 41;
  const PipelineResult r = run_pipeline(p.hierarchy, p.validation, cfg);
  const std::size_t coarsest = p.hierarchy.level_count() - 1;
  const auto first = disaggregate(r.levels.front().best->sv_ids, *p.hierarchy.positive[coarsest - 1].to_coarser,
                                  *p.hierarchy.negative[coarsest - 1].to_coarser);
  REQUIRE(first.size() >= 41);
  REQUIRE(r.levels.size() == 2);
  CHECK(r.levels[1].early_stop);
  CHECK_FALSE(r.levels[1].trained());
  CHECK(r.early_stop_level == coarsest);
  CHECK(same_model(r.final_model, *r.levels.front().best));
}

TEST_CASE("property: once the size guard trips nothing finer is trained") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Problem p = twonorm_problem(350, 25, seed);
    PipelineConfig cfg;
    cfg.refinement.theta = 50 + 40 * seed;
    const PipelineResult r = run_pipeline(p.hierarchy, p.validation, cfg);
    bool stopped = false;
    for (const LevelSolution &s : r.levels) {
      if (stopped) CHECK_FALSE(s.trained());
      if (s.early_stop) {
        stopped = true;
        CHECK(r.early_stop_level == s.level);
        CHECK(s.training_rows.size() >= cfg.refinement.theta);
      }
    }
    if (stopped) CHECK_FALSE(r.levels.back().trained());
    if (!stopped) CHECK(r.levels.back().level == 1);
  }
}

TEST_CASE("fine level identical to the coarse level keeps at least the coarse quality") {
  const Problem p = twonorm_problem(60, 300, 12);
  LevelHierarchy h;
  h.positive = {p.hierarchy.positive[0], p.hierarchy.positive[0]};
  h.negative = {p.hierarchy.negative[0], p.hierarchy.negative[0]};
  h.positive[0].to_coarser = InterpolationOperator::identity(h.positive[0].size());
  h.negative[0].to_coarser = InterpolationOperator::identity(h.negative[0].size());

  const PipelineConfig cfg = small_pipeline(300);
  RecoveryState state;
  LevelSolution coarse = solve_coarsest(h, p.validation, state, cfg);
  // A coarse model whose support covers the whole level, so the fine training set equals it.
  SvmModel &best = *coarse.best;
  best.sv_ids.resize(h.size(1));
  std::iota(best.sv_ids.begin(), best.sv_ids.end(), std::size_t{0});
  const LevelSolution fine = refine_level(h, 0, coarse, p.validation, state, cfg);
  CHECK(fine.training_rows.size() == h.size(0));
  CHECK(fine.quality() >= coarse.quality());
}

TEST_CASE("one-sided disaggregation falls back to the whole class") {
  const Problem p = twonorm_problem(60, 300, 13);
  LevelHierarchy h;
  h.positive = {p.hierarchy.positive[0], p.hierarchy.positive[0]};
  h.negative = {p.hierarchy.negative[0], p.hierarchy.negative[0]};
  h.positive[0].to_coarser = InterpolationOperator::identity(h.positive[0].size());
  h.negative[0].to_coarser = InterpolationOperator::identity(h.negative[0].size());
  PipelineConfig cfg = small_pipeline(300);
  cfg.refinement.recovery = false;
  RecoveryState state;
  LevelSolution coarse = solve_coarsest(h, p.validation, state, cfg);
  const std::size_t n_pos = h.positive[1].size();
  coarse.best->sv_ids = {n_pos, n_pos + 1, n_pos + 2};
  const LevelSolution fine = refine_level(h, 0, coarse, p.validation, state, cfg);
  CHECK(fine.training_negative == 3);
  CHECK(fine.training_positive == n_pos);
}

TEST_CASE("constructed drop through refine_level: paired runs with and without recovery") {
  const drop::TwoLevel two = drop::two_level();
  const LabeledDataset validation = drop::validation();
  PipelineConfig on;
  on.refinement.theta = 1000;
  PipelineConfig off = on;
  off.refinement.recovery = false;

  RecoveryState s_on;
  s_on.q_max = 1.0;
  RecoveryState s_off = s_on;
  const LevelSolution with = refine_level(two.hierarchy, 0, two.coarse, validation, s_on, on);
  const LevelSolution without = refine_level(two.hierarchy, 0, two.coarse, validation, s_off, off);
  REQUIRE(without.training_rows == drop::training_rows());
  CHECK(without.quality() < 1.0 - on.refinement.delta);
  CHECK(with.recovery.triggered);
  CHECK(with.recovery.accepted);
  CHECK(with.quality() >= without.quality());
  CHECK(with.quality() > without.quality());
  CHECK(std::binary_search(with.training_rows.begin(), with.training_rows.end(), drop::kMissingRow));
}
