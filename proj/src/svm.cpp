#include "amlsvm/svm.hpp"

#include "amlsvm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <stdexcept>

namespace amlsvm {

std::vector<double> instance_box(std::span<const double> volumes, std::span<const int> labels, double c) {
  double positive = 0.0;
  double negative = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? positive : negative) += volumes[i];
  std::vector<double> upper(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) upper[i] = c * volumes[i] / (labels[i] > 0 ? positive : negative);
  return upper;
}

namespace {

constexpr double kBoxSnap = 1e-12;

double snap_to_box(double a, double upper) {
  if (a <= upper * kBoxSnap) return 0.0;
  if (a >= upper * (1.0 - kBoxSnap)) return upper;
  return a;
}

/// LRU cache of kernel rows K(i, .). Rows are recomputed on a miss.
class KernelCache {
 public:
  KernelCache(const Matrix &points, double gamma, std::size_t budget_bytes)
      : points_(points), gamma_(gamma), rows_(points.rows()), where_(points.rows()) {
    const std::size_t row_bytes = std::max<std::size_t>(1, points.rows() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  /// Returns rows i and j; neither evicts the other.
  std::pair<const double *, const double *> pair(std::size_t i, std::size_t j) {
    const double *ri = fetch(i, std::numeric_limits<std::size_t>::max());
    const double *rj = fetch(j, i);
    return {ri, rj};
  }

 private:
  const double *fetch(std::size_t i, std::size_t pinned) {
    if (!rows_[i].empty()) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i].data();
    }
    if (lru_.size() >= capacity_) {
      auto victim = std::prev(lru_.end());
      if (*victim == pinned) victim = std::prev(victim);
      rows_[*victim] = {};
      lru_.erase(victim);
    }
    const std::size_t n = points_.rows();
    auto &row = rows_[i];
    row.resize(n);
    const auto xi = points_.row(i);
    for (std::size_t t = 0; t < n; ++t) row[t] = rbf_kernel(xi, points_.row(t), gamma_);
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return row.data();
  }

  const Matrix &points_;
  double gamma_;
  std::size_t capacity_ = 2;
  std::vector<std::vector<double>> rows_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
};

}  // namespace

DualSolution solve_dual(const Matrix &points, std::span<const int> labels, std::span<const double> upper, double gamma,
                        const SolverOptions &options) {
  const std::size_t n = labels.size();
  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  sol.gradient.assign(n, -1.0);
  if (n == 0) return sol;

  KernelCache cache(points, gamma, options.cache_bytes);
  auto &alpha = sol.alpha;
  auto &grad = sol.gradient;
  const auto y = [&](std::size_t t) { return static_cast<double>(labels[t]); };
  const auto in_up = [&](std::size_t t) { return labels[t] > 0 ? alpha[t] < upper[t] : alpha[t] > 0.0; };
  const auto in_low = [&](std::size_t t) { return labels[t] > 0 ? alpha[t] > 0.0 : alpha[t] < upper[t]; };
  constexpr double kTau = 1e-12;

  sol.converged = false;
  while (sol.iterations < options.max_iterations) {
    // i maximizes -y G over I_up, j minimizes it over I_low; strict comparisons keep the lower index.
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y(t) * grad[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    if (i == n || j == n || g_max - g_min < options.tolerance) {
      sol.converged = true;
      break;
    }
    ++sol.iterations;

    const auto [ki, kj] = cache.pair(i, j);
    const double yi = y(i);
    const double yj = y(j);
    const double ci = upper[i];
    const double cj = upper[j];
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    double ai = old_ai;
    double aj = old_aj;
    const double kij = ki[j];
    double quad = ki[i] + kj[j] - 2.0 * kij;
    if (quad <= 0.0) quad = kTau;

    if (yi != yj) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) {
          aj = 0;
          ai = diff;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = -diff;
      }
      if (diff > ci - cj) {
        if (ai > ci) {
          ai = ci;
          aj = ci - diff;
        }
      } else if (aj > cj) {
        aj = cj;
        ai = cj + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) {
          ai = ci;
          aj = sum - ci;
        }
      } else if (aj < 0) {
        aj = 0;
        ai = sum;
      }
      if (sum > cj) {
        if (aj > cj) {
          aj = cj;
          ai = sum - cj;
        }
      } else if (ai < 0) {
        ai = 0;
        aj = sum;
      }
    }
    // Rounding can leave a variable a few ulps inside its box; treat it as bounded.
    alpha[i] = snap_to_box(ai, ci);
    alpha[j] = snap_to_box(aj, cj);
    ai = alpha[i];
    aj = alpha[j];

    const double di = (ai - old_ai) * yi;
    const double dj = (aj - old_aj) * yj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += y(t) * (ki[t] * di + kj[t] * dj);
  }

  // rho: average of y G over free variables, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y(t) * grad[t];
    if (alpha[t] >= upper[t]) {
      if (labels[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (labels[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  if (free_count > 0) {
    sol.rho = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    sol.rho = 0.5 * (ub + lb);
  } else {
    sol.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }

  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (grad[t] - 1.0);
  sol.objective = 0.5 * obj;
  return sol;
}

double dual_objective(const Matrix &points, std::span<const int> labels, std::span<const double> alpha, double gamma) {
  double quad = 0.0;
  double linear = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == 0.0) continue;
      quad += alpha[i] * alpha[j] * labels[i] * labels[j] * rbf_kernel(points.row(i), points.row(j), gamma);
    }
  }
  return 0.5 * quad - linear;
}

SvmModel train_wsvm(const LabeledDataset &train, const SvmParams &params, const SolverOptions &options) {
  if (!(params.c > 0.0) || !(params.gamma > 0.0)) throw ConfigError("C and gamma must be positive");
  const std::size_t positives = train.count(1);
  if (positives == 0 || positives == train.size())
    throw TrainingError("training set must contain both classes (got " + std::to_string(positives) + " positive of " +
                        std::to_string(train.size()) + ")");

  const std::vector<double> upper = instance_box(train.volumes, train.labels, params.c);
  const DualSolution sol = solve_dual(train.points, train.labels, upper, params.gamma, options);

  SvmModel model;
  model.params = params;
  model.support_vectors = Matrix(0, train.dim());
  double balance = 0.0;
  double scale = 0.0;
  for (std::size_t t = 0; t < train.size(); ++t) {
    const double a = sol.alpha[t];
    if (a < -1e-12 || a > upper[t] * (1.0 + 1e-12))
      throw std::logic_error("dual solution violates its box constraint");
    balance += a * train.labels[t];
    scale = std::max(scale, upper[t]);
    if (a > kSupportThreshold) {
      model.support_vectors.append_row(train.points.row(t));
      model.coefficients.push_back(a * train.labels[t]);
      model.sv_ids.push_back(train.ids[t]);
      model.sv_labels.push_back(train.labels[t]);
    }
  }
  if (std::abs(balance) > 1e-8 * std::max(1.0, scale)) throw std::logic_error("dual solution violates sum(alpha y) = 0");
  model.nsv = model.coefficients.size();
  model.bias = -sol.rho;
  model.training_size = train.size();
  model.objective = sol.objective;
  model.iterations = sol.iterations;
  model.converged = sol.converged;
  return model;
}

double decision_value(const SvmModel &model, std::span<const double> x) {
  double f = model.bias;
  for (std::size_t s = 0; s < model.nsv; ++s)
    f += model.coefficients[s] * rbf_kernel(model.support_vectors.row(s), x, model.params.gamma);
  return f;
}

Predictions predict(const SvmModel &model, const Matrix &points) {
  Predictions out;
  if (points.rows() == 0) return out;
  if (points.cols() != model.dim())
    throw DataError("model expects " + std::to_string(model.dim()) + " features, got " + std::to_string(points.cols()));
  out.labels.reserve(points.rows());
  out.decision_values.reserve(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double f = decision_value(model, points.row(i));
    out.decision_values.push_back(f);
    out.labels.push_back(f >= 0.0 ? 1 : -1);
  }
  return out;
}

}  // namespace amlsvm
