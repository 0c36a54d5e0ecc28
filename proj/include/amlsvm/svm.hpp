#pragma once

#include "amlsvm/dataset.hpp"
#include "amlsvm/matrix.hpp"
#include "amlsvm/quality.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace amlsvm {

struct SvmParams {
  double c = 1.0;      // base penalty; split into per-instance boxes by instance_box
  double gamma = 1.0;  // RBF width in exp(-gamma ||x - z||^2)
  friend bool operator==(const SvmParams &, const SvmParams &) = default;
};

struct SolverOptions {
  double tolerance = 1e-3;  // max KKT violation (m(alpha) - M(alpha))
  std::size_t max_iterations = 10'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
};

[[nodiscard]] inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) noexcept {
  return std::exp(-gamma * squared_distance(a, b));
}

/// U_i = C * v_i / (total volume of i's class in this training set).
[[nodiscard]] std::vector<double> instance_box(std::span<const double> volumes, std::span<const int> labels, double c);

/// Result of the dual solve for min 1/2 a'Qa - e'a, 0 <= a <= U, y'a = 0.
struct DualSolution {
  std::vector<double> alpha;
  std::vector<double> gradient;  // Qa - e
  double rho = 0.0;              // decision value is sum a_i y_i K(x_i, x) - rho
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

/// Two-variable SMO with maximal-violating-pair selection (ties resolved to the lower index)
/// and an LRU cache of kernel rows.
[[nodiscard]] DualSolution solve_dual(const Matrix &points, std::span<const int> labels,
                                      std::span<const double> upper, double gamma, const SolverOptions &options);

/// 1/2 a'Qa - e'a evaluated directly from the kernel.
[[nodiscard]] double dual_objective(const Matrix &points, std::span<const int> labels, std::span<const double> alpha,
                                    double gamma);

struct SvmModel {
  SvmParams params;
  Matrix support_vectors;
  std::vector<double> coefficients;  // alpha_i * y_i per support vector
  std::vector<std::size_t> sv_ids;   // ids of the support vectors in the training set
  std::vector<int> sv_labels;
  double bias = 0.0;
  std::size_t nsv = 0;
  std::size_t training_size = 0;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = true;  // false when the iteration cap stopped the solver
  int level = 0;          // hierarchy level the model was trained on (larger = coarser)
  QualityMetrics quality;

  [[nodiscard]] std::size_t dim() const noexcept { return support_vectors.cols(); }
};

inline constexpr double kSupportThreshold = 1e-12;

/// Weighted soft-margin RBF SVM. Throws TrainingError on a single-class training set.
[[nodiscard]] SvmModel train_wsvm(const LabeledDataset &train, const SvmParams &params,
                                  const SolverOptions &options = {});

struct Predictions {
  std::vector<int> labels;
  std::vector<double> decision_values;
};

/// sign(sum coef_i K(sv_i, x) + b) with sign(0) = +1. Throws DataError on a dimension mismatch.
[[nodiscard]] Predictions predict(const SvmModel &model, const Matrix &points);
[[nodiscard]] double decision_value(const SvmModel &model, std::span<const double> x);

}  // namespace amlsvm
