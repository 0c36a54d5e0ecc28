#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace amlsvm {

/// Dense row-major matrix of doubles. One row per data point.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    assert(values_.size() == rows_ * cols_);
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    assert(i < rows_);
    return {values_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
    assert(i < rows_);
    return {values_.data() + i * cols_, cols_};
  }

  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }
  [[nodiscard]] double &operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }

  [[nodiscard]] const std::vector<double> &values() const noexcept { return values_; }

  void append_row(std::span<const double> r) {
    assert(r.size() == cols_);
    values_.insert(values_.end(), r.begin(), r.end());
    ++rows_;
  }

  /// Copies the given rows, in order, into a new matrix.
  [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const {
    Matrix out(0, cols_);
    out.values_.reserve(indices.size() * cols_);
    for (std::size_t i : indices) out.append_row(row(i));
    return out;
  }

  friend bool operator==(const Matrix &, const Matrix &) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

[[nodiscard]] inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace amlsvm
