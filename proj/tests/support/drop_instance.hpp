#pragma once

#include "amlsvm/coarsening.hpp"
#include "amlsvm/dataset.hpp"
#include "amlsvm/refinement.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace amlsvm::drop {

// A level whose positives form a cluster A near the origin plus a lone point B at (10, 0),
// with negatives in two clusters that bracket B. The training set J leaves B out, so the
// validation positive next to B is misclassified until recovery pulls B back in.
inline LabeledDataset level_data() {
  Matrix pts(0, 2);
  std::vector<int> labels;
  auto add = [&](double x, double y, int label) {
    pts.append_row(std::vector<double>{x, y});
    labels.push_back(label);
  };
  add(0, 0, 1);
  add(0, 1, 1);
  add(1, 0, 1);
  add(1, 1, 1);
  add(10, 0, 1);  // B, row 4
  for (double x : {5.0, 6.0, 7.0, 13.0, 14.0, 15.0})
    for (double y : {0.0, 1.0}) add(x, y, -1);
  return make_dataset(std::move(pts), std::move(labels));
}

inline constexpr std::size_t kMissingRow = 4;

inline std::vector<std::size_t> training_rows() {
  std::vector<std::size_t> rows(level_data().size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rows.erase(rows.begin() + kMissingRow);
  return rows;
}

inline LabeledDataset validation() {
  Matrix pts(0, 2);
  pts.append_row(std::vector<double>{0.5, 0.5});
  pts.append_row(std::vector<double>{10.0, 0.5});  // misclassified without B
  pts.append_row(std::vector<double>{6.0, 0.5});
  pts.append_row(std::vector<double>{14.0, 0.5});
  LabeledDataset v = make_dataset(std::move(pts), {1, 1, -1, -1});
  for (std::size_t i = 0; i < v.size(); ++i) v.ids[i] = 1000 + i;
  return v;
}

inline ProximityGraph edgeless(std::size_t n) { return ProximityGraph(n, {}, std::vector<double>(n, 1.0)); }

/// Two levels: the fine level is level_data() and every fine point has its own aggregate,
/// but the aggregate holding B sits far away at (-20, 0) on the coarse level. The coarse
/// model handed to refine_level lists every coarse point except that one as a support
/// vector, so the disaggregated training set is exactly training_rows().
struct TwoLevel {
  LevelHierarchy hierarchy;
  LevelSolution coarse;
};

inline TwoLevel two_level() {
  const LabeledDataset fine = level_data();
  TwoLevel out;
  LevelHierarchy &h = out.hierarchy;

  ClassLevel fine_pos;
  fine_pos.points = fine.points.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4});
  fine_pos.volumes.assign(5, 1.0);
  fine_pos.graph = edgeless(5);
  // Columns: 0..3 are the cluster points, 4 is the far aggregate holding B.
  fine_pos.to_coarser = InterpolationOperator(5, {{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}, {{3, 1.0}}, {{4, 1.0}}});

  std::vector<std::size_t> neg_rows(fine.size() - 5);
  std::iota(neg_rows.begin(), neg_rows.end(), std::size_t{5});
  ClassLevel fine_neg;
  fine_neg.points = fine.points.select_rows(neg_rows);
  fine_neg.volumes.assign(neg_rows.size(), 1.0);
  fine_neg.graph = edgeless(neg_rows.size());
  fine_neg.to_coarser = InterpolationOperator::identity(neg_rows.size());

  ClassLevel coarse_pos;
  coarse_pos.points = fine_pos.points;
  coarse_pos.points(4, 0) = -20.0;
  coarse_pos.volumes.assign(5, 1.0);
  coarse_pos.graph = edgeless(5);
  ClassLevel coarse_neg = fine_neg;
  coarse_neg.to_coarser.reset();

  h.positive = {fine_pos, coarse_pos};
  h.negative = {fine_neg, coarse_neg};

  LevelSolution &c = out.coarse;
  c.level = 2;
  SvmModel model;
  model.params = {std::exp2(3.0), std::exp2(-1.0)};
  model.quality = QualityMetrics::from_counts(2, 2, 0, 0);
  model.training_size = h.size(1);
  model.level = 2;
  for (std::size_t id = 0; id < h.size(1); ++id)
    if (id != 4) model.sv_ids.push_back(id);
  model.nsv = model.sv_ids.size();
  c.best = model;
  return out;
}

}  // namespace amlsvm::drop
