#pragma once

#include "amlsvm/dataset.hpp"
#include "amlsvm/svm.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace amlsvm {

/// A (C, gamma) pair in log2 space.
struct LogParams {
  double log2c = 0.0;
  double log2g = 0.0;

  [[nodiscard]] SvmParams to_params() const;
  [[nodiscard]] static LogParams from_params(const SvmParams &p);
  friend bool operator==(const LogParams &, const LogParams &) = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double width() const noexcept { return hi - lo; }
  [[nodiscard]] double mid() const noexcept { return 0.5 * (lo + hi); }
  [[nodiscard]] double clip(double v) const noexcept { return v < lo ? lo : (v > hi ? hi : v); }
};

/// Nested uniform design settings.
struct NudConfig {
  Range log2c{-5.0, 15.0};
  Range log2g{-15.0, 3.0};
  std::size_t stage1_points = 9;
  std::size_t stage2_points = 4;
  double stage2_shrink = 0.5;

  void validate() const;
};

/// Space-filling design of `count` points: an s x s lattice (s = ceil(sqrt(count))) with
/// half-cell offsets over a (width_c x width_g) rectangle centered at `center`, keeping the
/// `count` lattice points nearest the center. Points are clipped to the global bounds and
/// deduplicated within 1e-9. For odd s the center itself is a lattice point.
[[nodiscard]] std::vector<LogParams> nud_candidates(LogParams center, double width_c, double width_g,
                                                    std::size_t count, const NudConfig &bounds);

struct CandidateRecord {
  LogParams point;
  int stage = 1;
  bool failed = false;
  std::string error;
  QualityMetrics quality;  // on the validation set
};

struct NudResult {
  std::vector<SvmModel> models;           // successful candidates, in evaluation order
  std::vector<CandidateRecord> candidates;  // every candidate, including failures
  std::size_t best = 0;                   // index into models
  std::size_t trained = 0;                // number of training runs attempted

  [[nodiscard]] const SvmModel &best_model() const { return models[best]; }
};

struct NudRun {
  const NudConfig &config;
  SolverOptions solver{};
  unsigned threads = 1;
  int level = 0;  // stamped into each model
};

/// Two-stage search. Stage 1 spans the full range centered at `center` (rectangle midpoint
/// when absent); stage 2 spans the range scaled by stage2_shrink around the stage-1 best.
/// Every candidate is trained on `train` and scored on `validation`; the result is
/// select_best over all of them. Failing candidates are dropped; if all fail, throws
/// TrainingError.
[[nodiscard]] NudResult nud_search(const LabeledDataset &train, const LabeledDataset &validation,
                                   std::optional<LogParams> center, const NudRun &run);

}  // namespace amlsvm
