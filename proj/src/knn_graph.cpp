#include "amlsvm/knn_graph.hpp"

#include "amlsvm/parallel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <tuple>
#include <utility>

namespace amlsvm {

ProximityGraph::ProximityGraph(std::size_t node_count, std::vector<Edge> edges, std::vector<double> volumes)
    : edges_(std::move(edges)), volumes_(std::move(volumes)) {
  if (volumes_.size() != node_count) throw std::invalid_argument("volume count differs from node count");
  for (double v : volumes_)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("node volumes must be positive and finite");
  std::sort(edges_.begin(), edges_.end(), [](const Edge &a, const Edge &b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  std::vector<std::size_t> degree_count(node_count, 0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge &edge = edges_[e];
    if (edge.u >= edge.v || edge.v >= node_count) throw std::invalid_argument("edge endpoints must satisfy u < v < n");
    if (!(edge.weight > 0.0)) throw std::invalid_argument("edge weights must be positive");
    if (e > 0 && edges_[e - 1].u == edge.u && edges_[e - 1].v == edge.v) throw std::invalid_argument("duplicate edge");
    ++degree_count[edge.u];
    ++degree_count[edge.v];
  }
  offsets_.assign(node_count + 1, 0);
  for (std::size_t i = 0; i < node_count; ++i) offsets_[i + 1] = offsets_[i] + degree_count[i];
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Edge &edge : edges_) {
    adjacency_[cursor[edge.u]++] = {edge.v, edge.weight};
    adjacency_[cursor[edge.v]++] = {edge.u, edge.weight};
  }
  degree_.assign(node_count, 0.0);
  for (std::size_t i = 0; i < node_count; ++i) {
    auto first = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    auto last = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
    std::sort(first, last, [](const Neighbor &a, const Neighbor &b) { return a.node < b.node; });
    for (auto it = first; it != last; ++it) degree_[i] += it->weight;
  }
}

void ProximityGraph::write_edge_list(std::ostream &out) const {
  const auto precision = out.precision(17);
  for (const Edge &e : edges_) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
  out.precision(precision);
}

std::vector<std::vector<std::uint32_t>> ExactNeighborSearch::knn(const Matrix &points, std::size_t k) const {
  const std::size_t n = points.rows();
  std::vector<std::vector<std::uint32_t>> result(n);
  if (n < 2 || k == 0) return result;
  const std::size_t keep = std::min(k, n - 1);
  parallel_for(n, threads_, [&](std::size_t i) {
    std::vector<std::pair<double, std::uint32_t>> dist;
    dist.reserve(n - 1);
    const auto xi = points.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist.emplace_back(squared_distance(xi, points.row(j)), static_cast<std::uint32_t>(j));
    }
    // pair ordering gives distance first, then lower index
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
    auto &row = result[i];
    row.reserve(keep);
    for (std::size_t t = 0; t < keep; ++t) row.push_back(dist[t].second);
  });
  return result;
}

ProximityGraph build_knn_graph(const Matrix &points, std::span<const double> volumes, std::size_t k,
                               const NeighborSearch *search) {
  const std::size_t n = points.rows();
  assert(volumes.size() == n);
  const ExactNeighborSearch exact;
  const NeighborSearch &backend = search ? *search : exact;
  const auto knn = backend.knn(points, k);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t j : knn[i]) {
      const auto u = static_cast<std::uint32_t>(std::min<std::size_t>(i, j));
      const auto v = static_cast<std::uint32_t>(std::max<std::size_t>(i, j));
      pairs.emplace_back(u, v);
    }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto &[u, v] : pairs) {
    const double dist = std::sqrt(squared_distance(points.row(u), points.row(v)));
    edges.push_back({u, v, 1.0 / (dist + kDistanceFloor)});
  }
  return ProximityGraph(n, std::move(edges), std::vector<double>(volumes.begin(), volumes.end()));
}

std::vector<std::size_t> nearest_rows(const Matrix &candidates, std::span<const std::size_t> pool,
                                      std::span<const double> query, std::size_t count) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(pool.size());
  for (std::size_t r : pool) dist.emplace_back(squared_distance(query, candidates.row(r)), r);
  const std::size_t keep = std::min(count, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t t = 0; t < keep; ++t) out.push_back(dist[t].second);
  return out;
}

}  // namespace amlsvm
