#pragma once

#include "amlsvm/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace amlsvm {

struct Edge {
  std::uint32_t u;  // u < v
  std::uint32_t v;
  double weight;
  friend bool operator==(const Edge &, const Edge &) = default;
};

struct Neighbor {
  std::uint32_t node;
  double weight;
};

/// Weighted undirected graph over the points of one class. Edges are stored once (u < v)
/// and mirrored into a CSR adjacency for neighborhood queries.
class ProximityGraph {
 public:
  ProximityGraph() = default;
  /// Edges must satisfy u < v < node_count, be unique and carry positive weights.
  ProximityGraph(std::size_t node_count, std::vector<Edge> edges, std::vector<double> volumes);

  [[nodiscard]] std::size_t node_count() const noexcept { return volumes_.size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
  [[nodiscard]] const std::vector<Edge> &edges() const noexcept { return edges_; }
  [[nodiscard]] const std::vector<double> &volumes() const noexcept { return volumes_; }

  /// Neighbors of `node`, sorted by node index.
  [[nodiscard]] std::span<const Neighbor> neighbors(std::size_t node) const noexcept {
    return {adjacency_.data() + offsets_[node], adjacency_.data() + offsets_[node + 1]};
  }
  [[nodiscard]] double weighted_degree(std::size_t node) const noexcept { return degree_[node]; }

  /// Writes "i j w" lines, one per undirected edge.
  void write_edge_list(std::ostream &out) const;

 private:
  std::vector<Edge> edges_;
  std::vector<double> volumes_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::vector<double> degree_;
};

/// Neighbor search backend. Implementations return, for every row, up to k other rows
/// ordered by increasing distance with ties broken by lower index.
class NeighborSearch {
 public:
  virtual ~NeighborSearch() = default;
  [[nodiscard]] virtual std::vector<std::vector<std::uint32_t>> knn(const Matrix &points, std::size_t k) const = 0;
};

/// O(n^2 d) exhaustive search.
class ExactNeighborSearch final : public NeighborSearch {
 public:
  explicit ExactNeighborSearch(unsigned threads = 1) : threads_(threads) {}
  [[nodiscard]] std::vector<std::vector<std::uint32_t>> knn(const Matrix &points, std::size_t k) const override;

 private:
  unsigned threads_;
};

inline constexpr double kDistanceFloor = 1e-10;
inline constexpr std::size_t kDefaultKnn = 10;

/// Symmetrized k-NN graph with w_ij = 1 / (||x_i - x_j|| + 1e-10).
[[nodiscard]] ProximityGraph build_knn_graph(const Matrix &points, std::span<const double> volumes,
                                             std::size_t k = kDefaultKnn, const NeighborSearch *search = nullptr);

/// Indices of the `count` rows of `candidates` (restricted to `pool`) closest to `query`,
/// nearest first, ties by lower index.
[[nodiscard]] std::vector<std::size_t> nearest_rows(const Matrix &candidates, std::span<const std::size_t> pool,
                                                    std::span<const double> query, std::size_t count);

}  // namespace amlsvm
