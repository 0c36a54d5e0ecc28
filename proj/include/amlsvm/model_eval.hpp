#pragma once

#include "amlsvm/dataset.hpp"
#include "amlsvm/quality.hpp"
#include "amlsvm/svm.hpp"

#include <cstddef>
#include <span>

namespace amlsvm {

[[nodiscard]] QualityMetrics confusion(std::span<const int> truth, std::span<const int> predicted);

/// Predicts `data` and scores it. Pure; does not modify the model.
[[nodiscard]] QualityMetrics evaluate(const SvmModel &model, const LabeledDataset &data);

/// Half-width of the G-mean band inside which SN, nSV and level decide.
inline constexpr double kGmeanBand = 0.01;

/// Index of the best model: highest G-mean; within kGmeanBand of it, highest SN, then fewest
/// support vectors, then the coarser level, then the lower index. Requires a nonempty list
/// whose `quality` fields come from the same validation set.
[[nodiscard]] std::size_t select_best(std::span<const SvmModel> models);

}  // namespace amlsvm
