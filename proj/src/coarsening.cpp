#include "amlsvm/coarsening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace amlsvm {

void SeedPartition::reindex() {
  seeds.clear();
  coarse.assign(is_seed.size(), -1);
  for (std::size_t i = 0; i < is_seed.size(); ++i) {
    if (is_seed[i]) {
      coarse[i] = static_cast<std::ptrdiff_t>(seeds.size());
      seeds.push_back(i);
    }
  }
}

InterpolationOperator::InterpolationOperator(std::size_t coarse_count, std::vector<std::vector<Entry>> rows)
    : rows_(std::move(rows)), aggregates_(coarse_count) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    std::sort(rows_[i].begin(), rows_[i].end(), [](const Entry &a, const Entry &b) { return a.column < b.column; });
    for (const Entry &e : rows_[i]) {
      if (e.column >= coarse_count) throw std::invalid_argument("interpolation column out of range");
      if (e.value > 0.0) aggregates_[e.column].push_back(i);
    }
  }
}

InterpolationOperator InterpolationOperator::identity(std::size_t n) {
  std::vector<std::vector<Entry>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i].push_back({i, 1.0});
  return InterpolationOperator(n, std::move(rows));
}

double InterpolationOperator::row_sum(std::size_t fine) const noexcept {
  double s = 0.0;
  for (const Entry &e : rows_[fine]) s += e.value;
  return s;
}

bool InterpolationOperator::is_identity() const noexcept {
  if (fine_count() != coarse_count()) return false;
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (rows_[i].size() != 1 || rows_[i][0].column != i || rows_[i][0].value != 1.0) return false;
  return true;
}

// --- Algorithm steps ---------------------------------------------------------------------------

FutureVolumes compute_future_volumes(const ProximityGraph &g, std::span<const char> in_f) {
  const std::size_t n = g.node_count();
  const auto &v = g.volumes();
  const bool restricted = !in_f.empty();
  auto member = [&](std::size_t i) { return !restricted || in_f[i] != 0; };

  // Denominators: weight of j's edges into F.
  std::vector<double> f_degree(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!restricted) {
      f_degree[j] = g.weighted_degree(j);
      continue;
    }
    for (const Neighbor &nb : g.neighbors(j))
      if (member(nb.node)) f_degree[j] += nb.weight;
  }

  FutureVolumes fv{std::vector<double>(v.begin(), v.end()), 0.0};
  std::size_t evaluated = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!member(i)) continue;
    for (const Neighbor &nb : g.neighbors(i)) {
      const std::size_t j = nb.node;
      if (!member(j) || f_degree[j] <= 0.0) continue;
      fv.values[i] += v[j] * nb.weight / f_degree[j];
    }
    total += fv.values[i];
    ++evaluated;
  }
  fv.mean = evaluated > 0 ? total / static_cast<double>(evaluated) : 0.0;
  return fv;
}

SeedPartition select_seeds(const ProximityGraph &g, const FutureVolumes &fv, double eta, double seed_threshold) {
  const std::size_t n = g.node_count();
  SeedPartition sp;
  sp.is_seed.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (fv.values[i] > eta * fv.mean) sp.is_seed[i] = 1;

  std::vector<char> in_f(n);
  for (std::size_t i = 0; i < n; ++i) in_f[i] = sp.is_seed[i] ? 0 : 1;
  const FutureVolumes refreshed = compute_future_volumes(g, in_f);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i)
    if (in_f[i]) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return refreshed.values[a] > refreshed.values[b]; });

  // Running weight from each node into S.
  std::vector<double> to_seeds(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (!sp.is_seed[s]) continue;
    for (const Neighbor &nb : g.neighbors(s)) to_seeds[nb.node] += nb.weight;
  }
  for (std::size_t i : order) {
    const double degree = g.weighted_degree(i);
    const double coupling = degree > 0.0 ? to_seeds[i] / degree : 0.0;
    if (coupling <= seed_threshold) {
      sp.is_seed[i] = 1;
      for (const Neighbor &nb : g.neighbors(i)) to_seeds[nb.node] += nb.weight;
    }
  }
  sp.reindex();
  return sp;
}

InterpolationOperator build_interpolation(const ProximityGraph &g, SeedPartition &sp, std::size_t order) {
  const std::size_t n = g.node_count();
  if (order == 0) throw std::invalid_argument("interpolation order must be at least 1");
  bool promoted = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (sp.is_seed[i]) continue;
    const auto nbrs = g.neighbors(i);
    const bool has_seed = std::any_of(nbrs.begin(), nbrs.end(), [&](const Neighbor &nb) { return sp.is_seed[nb.node] != 0; });
    if (!has_seed) {
      sp.is_seed[i] = 1;
      promoted = true;
    }
  }
  if (promoted || sp.coarse.size() != n) sp.reindex();

  std::vector<std::vector<InterpolationOperator::Entry>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (sp.is_seed[i]) {
      rows[i].push_back({static_cast<std::size_t>(sp.coarse[i]), 1.0});
      continue;
    }
    std::vector<Neighbor> seed_nbrs;
    for (const Neighbor &nb : g.neighbors(i))
      if (sp.is_seed[nb.node]) seed_nbrs.push_back(nb);
    // strongest r seed neighbors; ties by lower index
    std::stable_sort(seed_nbrs.begin(), seed_nbrs.end(),
                     [](const Neighbor &a, const Neighbor &b) { return a.weight > b.weight; });
    if (seed_nbrs.size() > order) seed_nbrs.resize(order);
    double total = 0.0;
    for (const Neighbor &nb : seed_nbrs) total += nb.weight;
    for (const Neighbor &nb : seed_nbrs)
      rows[i].push_back({static_cast<std::size_t>(sp.coarse[nb.node]), nb.weight / total});
  }
  return InterpolationOperator(sp.seed_count(), std::move(rows));
}

ProximityGraph coarsen_graph(const ProximityGraph &g, const InterpolationOperator &P) {
  const std::size_t nc = P.coarse_count();
  struct Contribution {
    std::uint32_t p, q;
    double w;
  };
  std::vector<Contribution> contributions;
  for (const Edge &e : g.edges()) {
    for (const auto &a : P.row(e.u)) {
      for (const auto &b : P.row(e.v)) {
        if (a.column == b.column) continue;
        const auto p = static_cast<std::uint32_t>(std::min(a.column, b.column));
        const auto q = static_cast<std::uint32_t>(std::max(a.column, b.column));
        contributions.push_back({p, q, a.value * e.weight * b.value});
      }
    }
  }
  std::stable_sort(contributions.begin(), contributions.end(),
                   [](const Contribution &x, const Contribution &y) { return std::tie(x.p, x.q) < std::tie(y.p, y.q); });
  std::vector<Edge> edges;
  for (std::size_t t = 0; t < contributions.size();) {
    const auto p = contributions[t].p;
    const auto q = contributions[t].q;
    double w = 0.0;
    for (; t < contributions.size() && contributions[t].p == p && contributions[t].q == q; ++t) w += contributions[t].w;
    if (w > 0.0) edges.push_back({p, q, w});
  }

  std::vector<double> volumes(nc, 0.0);
  const auto &v = g.volumes();
  for (std::size_t j = 0; j < P.fine_count(); ++j)
    for (const auto &entry : P.row(j)) volumes[entry.column] += v[j] * entry.value;
  return ProximityGraph(nc, std::move(edges), std::move(volumes));
}

CoarsePoints coarsen_points(const Matrix &points, std::span<const double> volumes, const InterpolationOperator &P,
                            bool normalized) {
  if (P.is_identity()) return {points, std::vector<double>(volumes.begin(), volumes.end())};
  const std::size_t nc = P.coarse_count();
  const std::size_t d = points.cols();
  CoarsePoints out{Matrix(nc, d), std::vector<double>(nc, 0.0)};
  for (std::size_t j = 0; j < P.fine_count(); ++j) {
    const auto xj = points.row(j);
    for (const auto &entry : P.row(j)) {
      const double mass = normalized ? volumes[j] * entry.value : entry.value;
      auto xq = out.points.row(entry.column);
      for (std::size_t c = 0; c < d; ++c) xq[c] += mass * xj[c];
      out.volumes[entry.column] += volumes[j] * entry.value;
    }
  }
  if (normalized) {
    for (std::size_t q = 0; q < nc; ++q) {
      auto xq = out.points.row(q);
      for (double &c : xq) c /= out.volumes[q];
    }
  }
  return out;
}

CoarseningStep coarsen_once(const ProximityGraph &g, const Matrix &points, const CoarseningConfig &cfg) {
  const FutureVolumes fv = compute_future_volumes(g);
  SeedPartition sp = select_seeds(g, fv, cfg.eta, cfg.seed_threshold);
  CoarseningStep step;
  step.P = build_interpolation(g, sp, cfg.interpolation_order);
  step.seed_count = sp.seed_count();
  step.graph = coarsen_graph(g, step.P);
  step.coarse = coarsen_points(points, g.volumes(), step.P, cfg.normalized_points);
  return step;
}

// --- hierarchy ----------------------------------------------------------------------------------

LabeledDataset LevelHierarchy::level_data(std::size_t level) const {
  const ClassLevel &pos = positive[level];
  const ClassLevel &neg = negative[level];
  LabeledDataset ds;
  const std::size_t d = pos.points.cols();
  ds.points = Matrix(0, d);
  for (std::size_t i = 0; i < pos.size(); ++i) ds.points.append_row(pos.points.row(i));
  for (std::size_t i = 0; i < neg.size(); ++i) ds.points.append_row(neg.points.row(i));
  ds.labels.assign(pos.size(), 1);
  ds.labels.insert(ds.labels.end(), neg.size(), -1);
  ds.volumes = pos.volumes;
  ds.volumes.insert(ds.volumes.end(), neg.volumes.begin(), neg.volumes.end());
  ds.ids.resize(ds.labels.size());
  std::iota(ds.ids.begin(), ds.ids.end(), std::size_t{0});
  return ds;
}

void LevelHierarchy::write_trace(std::ostream &out) const {
  const auto precision = out.precision(17);
  for (std::size_t l = 0; l < level_count(); ++l) {
    auto total = [](const ClassLevel &c) { return std::accumulate(c.volumes.begin(), c.volumes.end(), 0.0); };
    out << "{\"level\":" << l + 1 << ",\"positive\":" << positive[l].size() << ",\"negative\":" << negative[l].size()
        << ",\"positive_seeds\":" << positive[l].seed_count << ",\"negative_seeds\":" << negative[l].seed_count
        << ",\"positive_edges\":" << positive[l].graph.edge_count()
        << ",\"negative_edges\":" << negative[l].graph.edge_count() << ",\"positive_volume\":" << total(positive[l])
        << ",\"negative_volume\":" << total(negative[l]) << "}\n";
  }
  out.precision(precision);
}

namespace {

ClassLevel make_level(Matrix points, ProximityGraph graph) {
  ClassLevel level;
  level.volumes = graph.volumes();
  level.points = std::move(points);
  level.graph = std::move(graph);
  return level;
}

}  // namespace

LevelHierarchy build_hierarchy(const Matrix &positive_points, ProximityGraph positive_graph,
                               const Matrix &negative_points, ProximityGraph negative_graph,
                               const CoarseningConfig &cfg) {
  if (positive_points.rows() == 0 || negative_points.rows() == 0)
    throw std::invalid_argument("both classes must be nonempty");
  if (cfg.coarsest_size < 1) throw std::invalid_argument("coarsest size M must be at least 1");

  LevelHierarchy h;
  h.positive.push_back(make_level(positive_points, std::move(positive_graph)));
  h.negative.push_back(make_level(negative_points, std::move(negative_graph)));

  bool positive_stalled = false;
  bool negative_stalled = false;
  while (true) {
    auto &pos = h.positive.back();
    auto &neg = h.negative.back();
    const bool pos_active = pos.size() > cfg.coarsest_size && !positive_stalled;
    const bool neg_active = neg.size() > cfg.coarsest_size && !negative_stalled;
    if (!pos_active && !neg_active) break;

    auto advance = [&](ClassLevel &cur, bool active, bool &stalled) -> std::optional<CoarseningStep> {
      if (!active) return std::nullopt;
      CoarseningStep step = coarsen_once(cur.graph, cur.points, cfg);
      if (static_cast<double>(step.seed_count) > cfg.stall_factor * static_cast<double>(cur.size())) {
        stalled = true;
        cur.stalled = true;
        return std::nullopt;
      }
      return step;
    };
    std::optional<CoarseningStep> pos_step = advance(pos, pos_active, positive_stalled);
    std::optional<CoarseningStep> neg_step = advance(neg, neg_active, negative_stalled);
    if (!pos_step && !neg_step) break;

    auto next_level = [](ClassLevel &cur, std::optional<CoarseningStep> &step) {
      if (!step) {
        cur.to_coarser = InterpolationOperator::identity(cur.size());
        cur.seed_count = 0;
        ClassLevel copy = make_level(cur.points, cur.graph);
        copy.stalled = cur.stalled;
        return copy;
      }
      cur.to_coarser = std::move(step->P);
      cur.seed_count = step->seed_count;
      return make_level(std::move(step->coarse.points), std::move(step->graph));
    };
    ClassLevel next_pos = next_level(pos, pos_step);
    ClassLevel next_neg = next_level(neg, neg_step);
    h.positive.push_back(std::move(next_pos));
    h.negative.push_back(std::move(next_neg));
  }
  return h;
}

}  // namespace amlsvm
