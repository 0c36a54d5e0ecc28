#include "amlsvm/model_eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amlsvm {

QualityMetrics QualityMetrics::from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  QualityMetrics m{tp, tn, fp, fn};
  m.acc = ratio(tp + tn, tp + tn + fp + fn);
  m.sn = ratio(tp, tp + fn);
  m.sp = ratio(tn, tn + fp);
  m.gmean = std::sqrt(m.sn * m.sp);
  return m;
}

QualityMetrics confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("label vectors differ in length");
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] > 0) {
      (predicted[i] > 0 ? tp : fn) += 1;
    } else {
      (predicted[i] > 0 ? fp : tn) += 1;
    }
  }
  return QualityMetrics::from_counts(tp, tn, fp, fn);
}

QualityMetrics evaluate(const SvmModel &model, const LabeledDataset &data) {
  const Predictions p = predict(model, data.points);
  return confusion(data.labels, p.labels);
}

std::size_t select_best(std::span<const SvmModel> models) {
  if (models.empty()) throw std::invalid_argument("select_best needs at least one model");
  double top = models.front().quality.gmean;
  for (const auto &m : models) top = std::max(top, m.quality.gmean);
  const double floor = top - kGmeanBand - 1e-12;

  std::size_t best = models.size();
  for (std::size_t i = 0; i < models.size(); ++i) {
    const SvmModel &m = models[i];
    if (m.quality.gmean < floor) continue;
    if (best == models.size()) {
      best = i;
      continue;
    }
    const SvmModel &b = models[best];
    if (m.quality.sn != b.quality.sn) {
      if (m.quality.sn > b.quality.sn) best = i;
    } else if (m.nsv != b.nsv) {
      if (m.nsv < b.nsv) best = i;
    } else if (m.level > b.level) {
      best = i;
    }
  }
  return best;
}

}  // namespace amlsvm
