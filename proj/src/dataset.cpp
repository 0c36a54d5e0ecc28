#include "amlsvm/dataset.hpp"

#include "amlsvm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

namespace amlsvm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view token, double &out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size() && std::isfinite(out);
}

/// "+1", "1" and "1.0" name the same class.
std::string canonical_label(std::string_view token) {
  double value = 0.0;
  if (parse_double(token, value)) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec == std::errc{}) return std::string(buf, ptr);
  }
  return std::string(token);
}

[[noreturn]] void fail_line(std::size_t line, const std::string &what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::size_t LabeledDataset::count(int label) const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.points = points.select_rows(rows);
  out.labels.reserve(rows.size());
  out.volumes.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t r : rows) {
    out.labels.push_back(labels[r]);
    out.volumes.push_back(volumes[r]);
    out.ids.push_back(ids[r]);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.push_back(i);
  return out;
}

void LabeledDataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw DataError("dataset is empty");
  if (points.rows() != n || volumes.size() != n || ids.size() != n)
    throw DataError("dataset columns have inconsistent lengths");
  for (int y : labels)
    if (y != 1 && y != -1) throw DataError("label outside {+1,-1}");
  for (double v : volumes)
    if (!(v > 0.0)) throw DataError("non-positive volume");
  std::vector<std::size_t> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw DataError("duplicate ids");
}

LabeledDataset make_dataset(Matrix points, std::vector<int> labels) {
  LabeledDataset ds;
  const std::size_t n = labels.size();
  ds.points = std::move(points);
  ds.labels = std::move(labels);
  ds.volumes.assign(n, 1.0);
  ds.ids.resize(n);
  std::iota(ds.ids.begin(), ds.ids.end(), std::size_t{0});
  return ds;
}

// --- parsing -----------------------------------------------------------------------------

RawTable parse_libsvm(std::istream &in, std::size_t min_dim) {
  struct SparseRow {
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<SparseRow> rows;
  RawTable table;
  std::size_t dim = min_dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = trim(view.substr(0, hash));
    if (view.empty()) continue;

    std::istringstream tokens{std::string(view)};
    std::string token;
    tokens >> token;
    if (token.find(':') != std::string::npos) fail_line(line_no, "missing label before features");
    table.labels.push_back(canonical_label(token));

    SparseRow row;
    std::size_t previous = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos) fail_line(line_no, "expected index:value, got '" + token + "'");
      std::size_t index = 0;
      const std::string_view idx_text(token.data(), colon);
      const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
      if (ec != std::errc{} || ptr != idx_text.data() + idx_text.size() || index == 0)
        fail_line(line_no, "bad feature index '" + std::string(idx_text) + "'");
      if (index <= previous) fail_line(line_no, "feature indices must be strictly increasing");
      previous = index;
      double value = 0.0;
      if (!parse_double(std::string_view(token).substr(colon + 1), value))
        fail_line(line_no, "bad feature value in '" + token + "'");
      row.entries.emplace_back(index - 1, value);
      dim = std::max(dim, index);
    }
    rows.push_back(std::move(row));
  }

  table.points = Matrix(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto &[j, v] : rows[i].entries) table.points(i, j) = v;
  return table;
}

RawTable parse_csv(std::istream &in, const CsvOptions &options) {
  RawTable table;
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = view.find(',', start);
      fields.push_back(trim(view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }

    std::optional<std::size_t> label_col;
    if (options.label_column) {
      const int c = *options.label_column;
      const long resolved = c < 0 ? static_cast<long>(fields.size()) + c : c;
      if (resolved < 0 || resolved >= static_cast<long>(fields.size()))
        fail_line(line_no, "label column out of range");
      label_col = static_cast<std::size_t>(resolved);
    }
    const std::size_t feature_count = fields.size() - (label_col ? 1 : 0);
    if (rows == 0) {
      cols = feature_count;
    } else if (feature_count != cols) {
      fail_line(line_no, "expected " + std::to_string(cols) + " features, found " + std::to_string(feature_count));
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (label_col && f == *label_col) {
        if (fields[f].empty()) fail_line(line_no, "empty label");
        table.labels.push_back(canonical_label(fields[f]));
        continue;
      }
      double v = 0.0;
      if (!parse_double(fields[f], v)) fail_line(line_no, "bad numeric field '" + std::string(fields[f]) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  table.points = Matrix(rows, cols, std::move(values));
  return table;
}

RawTable load_table(const std::filesystem::path &path, FileFormat format, const CsvOptions &csv, std::size_t min_dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return format == FileFormat::libsvm ? parse_libsvm(in, min_dim) : parse_csv(in, csv);
  } catch (const DataError &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

LabelMap infer_label_map(const RawTable &table) {
  if (!table.labeled()) throw DataError("dataset has no labels");
  std::vector<std::string> order;
  std::map<std::string, std::size_t> counts;
  for (const auto &l : table.labels) {
    if (counts[l]++ == 0) order.push_back(l);
  }
  if (order.size() == 1) throw DataError("dataset contains a single class ('" + order.front() + "')");
  if (order.size() != 2)
    throw DataError("expected exactly two classes, found " + std::to_string(order.size()));
  const std::size_t first = counts[order[0]];
  const std::size_t second = counts[order[1]];
  if (second < first) return {order[1], order[0]};
  return {order[0], order[1]};
}

LabeledDataset to_labeled(RawTable table, const LabelMap &map) {
  std::vector<int> labels;
  labels.reserve(table.labels.size());
  for (const auto &l : table.labels) {
    if (l == map.positive) {
      labels.push_back(1);
    } else if (l == map.negative) {
      labels.push_back(-1);
    } else {
      throw DataError("unknown label '" + l + "'");
    }
  }
  LabeledDataset ds = make_dataset(std::move(table.points), std::move(labels));
  ds.validate();
  return ds;
}

LabeledDataset load_dataset(const std::filesystem::path &path, FileFormat format, const CsvOptions &csv,
                            LabelMap *map_out) {
  RawTable table = load_table(path, format, csv);
  if (table.points.rows() == 0) throw DataError(path.string() + ": no data rows");
  const LabelMap map = infer_label_map(table);
  if (map_out) *map_out = map;
  return to_labeled(std::move(table), map);
}

// --- preprocessing -------------------------------------------------------------------------

NormalizationStats compute_normalization(const Matrix &points) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  NormalizationStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (n == 0) return stats;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += points(i, j);
  for (double &m : stats.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = points(i, j) - stats.mean[j];
      var[j] += diff * diff;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    // Constant (or numerically constant) columns: center only.
    stats.stddev[j] = sd > 1e-12 * std::max(1.0, std::abs(stats.mean[j])) ? sd : 1.0;
  }
  return stats;
}

void apply_normalization(Matrix &points, const NormalizationStats &stats) {
  if (points.cols() != stats.mean.size())
    throw DataError("normalization expects " + std::to_string(stats.mean.size()) + " features, got " +
                    std::to_string(points.cols()));
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto r = points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = (r[j] - stats.mean[j]) / stats.stddev[j];
  }
}

std::pair<LabeledDataset, NormalizationStats> zscore_normalize(LabeledDataset ds) {
  if (ds.size() < 2) throw DataError("z-score normalization needs at least two points");
  NormalizationStats stats = compute_normalization(ds.points);
  apply_normalization(ds.points, stats);
  return {std::move(ds), std::move(stats)};
}

std::vector<std::size_t> SplitPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> SplitPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

SplitPlan make_split_plan(const LabeledDataset &ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold count must be at least 2");
  SplitPlan plan{k, std::vector<std::size_t>(ds.size(), 0), seed};
  std::mt19937_64 rng(seed);
  for (int label : {1, -1}) {
    std::vector<std::size_t> rows = ds.indices_of(label);
    if (rows.size() < k)
      throw DataError("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                      " points, fewer than k=" + std::to_string(k));
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t pos = 0; pos < rows.size(); ++pos) plan.fold_of[rows[pos]] = pos % k;
  }
  return plan;
}

ValidationSample sample_validation(const LabeledDataset &train, double r_min, double r_maj, std::uint64_t seed) {
  if (!(r_min > 0.0 && r_min <= 1.0) || !(r_maj > 0.0 && r_maj <= 1.0))
    throw ConfigError("validation ratios must lie in (0, 1]");
  ValidationSample sample;
  sample.minority_ratio = r_min;
  sample.majority_ratio = r_maj;
  std::mt19937_64 rng(seed);
  for (int label : {1, -1}) {
    std::vector<std::size_t> rows = train.indices_of(label);
    if (rows.empty()) throw DataError("cannot sample validation: class " + std::to_string(label) + " is empty");
    const double ratio = label == 1 ? r_min : r_maj;
    const auto take = std::min(
        rows.size(), static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(rows.size()) - 1e-9)));
    std::shuffle(rows.begin(), rows.end(), rng);
    sample.rows.insert(sample.rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(take, 1)));
  }
  std::sort(sample.rows.begin(), sample.rows.end());
  return sample;
}

}  // namespace amlsvm
