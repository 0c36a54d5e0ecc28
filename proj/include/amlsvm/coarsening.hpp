#pragma once

#include "amlsvm/dataset.hpp"
#include "amlsvm/knn_graph.hpp"
#include "amlsvm/matrix.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace amlsvm {

struct FutureVolumes {
  std::vector<double> values;  // one per graph node
  double mean = 0.0;           // over the evaluated node set
};

struct SeedPartition {
  std::vector<char> is_seed;          // per fine node
  std::vector<std::size_t> seeds;     // fine indices, ascending; position = coarse index
  std::vector<std::ptrdiff_t> coarse;  // fine node -> coarse index, -1 for non-seeds

  [[nodiscard]] std::size_t seed_count() const noexcept { return seeds.size(); }
  /// Rebuilds `seeds` and `coarse` from `is_seed`.
  void reindex();
};

/// Sparse |V_f| x |S| row-stochastic interpolation operator, stored row-wise.
class InterpolationOperator {
 public:
  struct Entry {
    std::size_t column;
    double value;
  };

  InterpolationOperator() = default;
  InterpolationOperator(std::size_t coarse_count, std::vector<std::vector<Entry>> rows);
  [[nodiscard]] static InterpolationOperator identity(std::size_t n);

  [[nodiscard]] std::size_t fine_count() const noexcept { return rows_.size(); }
  [[nodiscard]] std::size_t coarse_count() const noexcept { return aggregates_.size(); }
  [[nodiscard]] std::span<const Entry> row(std::size_t fine) const noexcept { return rows_[fine]; }
  /// Fine nodes with a nonzero entry in column q, ascending.
  [[nodiscard]] std::span<const std::size_t> aggregate(std::size_t q) const noexcept { return aggregates_[q]; }
  [[nodiscard]] double row_sum(std::size_t fine) const noexcept;
  [[nodiscard]] bool is_identity() const noexcept;

 private:
  std::vector<std::vector<Entry>> rows_;
  std::vector<std::vector<std::size_t>> aggregates_;
};

struct CoarseningConfig {
  double eta = 2.0;             // pre-seeding factor on the mean future volume
  double seed_threshold = 0.5;  // Q: max fraction of a node's weight already coupled to S
  std::size_t interpolation_order = 2;  // r
  std::size_t coarsest_size = 300;      // M, per class
  double stall_factor = 0.95;
  bool normalized_points = true;  // volume-weighted mean instead of the raw P-weighted sum
};

/// theta_i = v_i + sum_{j in N(i) cap F} v_j w_ji / sum_{k in N(j) cap F} w_jk.
/// An empty mask means F = all nodes. Nodes outside F keep theta_i = v_i and do not
/// enter the mean.
[[nodiscard]] FutureVolumes compute_future_volumes(const ProximityGraph &g, std::span<const char> in_f = {});

[[nodiscard]] SeedPartition select_seeds(const ProximityGraph &g, const FutureVolumes &fv, double eta,
                                         double seed_threshold);

/// Builds P for the partition. Non-seeds without a seed neighbor are promoted into `sp`.
[[nodiscard]] InterpolationOperator build_interpolation(const ProximityGraph &g, SeedPartition &sp,
                                                        std::size_t order);

/// Galerkin-style coarse graph: w_pq = sum_{k != l} P_kp w_kl P_lq for p != q; coarse
/// volumes are P^T v.
[[nodiscard]] ProximityGraph coarsen_graph(const ProximityGraph &g, const InterpolationOperator &P);

struct CoarsePoints {
  Matrix points;
  std::vector<double> volumes;
};

[[nodiscard]] CoarsePoints coarsen_points(const Matrix &points, std::span<const double> volumes,
                                          const InterpolationOperator &P, bool normalized = true);

/// One class at one level. `to_coarser` maps this level onto the next coarser one and is
/// absent on the coarsest level.
struct ClassLevel {
  Matrix points;
  std::vector<double> volumes;
  ProximityGraph graph;
  std::optional<InterpolationOperator> to_coarser;
  std::size_t seed_count = 0;  // |S| of the step that produced the next level (0 if copied)
  bool stalled = false;

  [[nodiscard]] std::size_t size() const noexcept { return points.rows(); }
};

/// Per-class level chains of equal length. Index 0 is the finest level.
struct LevelHierarchy {
  std::vector<ClassLevel> positive;
  std::vector<ClassLevel> negative;

  [[nodiscard]] std::size_t level_count() const noexcept { return positive.size(); }
  [[nodiscard]] std::size_t size(std::size_t level) const noexcept {
    return positive[level].size() + negative[level].size();
  }
  /// Both classes of one level stacked positive-first. ids are level-local indices:
  /// positives 0..n+-1, negatives n+..n+ + n- - 1.
  [[nodiscard]] LabeledDataset level_data(std::size_t level) const;

  /// Writes one JSON object per level (sizes, seed counts, volume totals).
  void write_trace(std::ostream &out) const;
};

/// Coarsens one class by one level.
struct CoarseningStep {
  InterpolationOperator P;
  ProximityGraph graph;
  CoarsePoints coarse;
  std::size_t seed_count = 0;
};
[[nodiscard]] CoarseningStep coarsen_once(const ProximityGraph &g, const Matrix &points,
                                          const CoarseningConfig &cfg);

/// Coarsens both classes independently until each has at most M points; a class that is
/// already small enough (or stalls) is copied unchanged into the next level.
[[nodiscard]] LevelHierarchy build_hierarchy(const Matrix &positive_points, ProximityGraph positive_graph,
                                             const Matrix &negative_points, ProximityGraph negative_graph,
                                             const CoarseningConfig &cfg);

}  // namespace amlsvm
