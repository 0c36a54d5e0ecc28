#include "amlsvm/param_fit.hpp"

#include "amlsvm/error.hpp"
#include "amlsvm/model_eval.hpp"
#include "amlsvm/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace amlsvm {

namespace {

constexpr double kDedupTolerance = 1e-9;

bool same_point(const LogParams &a, const LogParams &b) {
  return std::abs(a.log2c - b.log2c) <= kDedupTolerance && std::abs(a.log2g - b.log2g) <= kDedupTolerance;
}

}  // namespace

SvmParams LogParams::to_params() const { return {std::exp2(log2c), std::exp2(log2g)}; }

LogParams LogParams::from_params(const SvmParams &p) { return {std::log2(p.c), std::log2(p.gamma)}; }

void NudConfig::validate() const {
  if (!(log2c.lo < log2c.hi) || !(log2g.lo < log2g.hi)) throw ConfigError("NUD ranges need lo < hi");
  if (stage1_points < 1) throw ConfigError("NUD stage 1 needs at least one point");
  if (!(stage2_shrink > 0.0 && stage2_shrink <= 1.0)) throw ConfigError("NUD shrink factor must lie in (0, 1]");
}

std::vector<LogParams> nud_candidates(LogParams center, double width_c, double width_g, std::size_t count,
                                      const NudConfig &bounds) {
  std::vector<LogParams> out;
  if (count == 0) return out;
  center = {bounds.log2c.clip(center.log2c), bounds.log2g.clip(center.log2g)};

  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count)) - 1e-12));
  struct LatticePoint {
    double offset_c, offset_g, distance;
    std::size_t order;
  };
  std::vector<LatticePoint> lattice;
  for (std::size_t a = 0; a < side; ++a) {
    for (std::size_t b = 0; b < side; ++b) {
      // half-cell offsets in units of the rectangle width, in [-1/2, 1/2]
      const double u = (static_cast<double>(a) + 0.5) / static_cast<double>(side) - 0.5;
      const double v = (static_cast<double>(b) + 0.5) / static_cast<double>(side) - 0.5;
      lattice.push_back({u * width_c, v * width_g, u * u + v * v, lattice.size()});
    }
  }
  std::stable_sort(lattice.begin(), lattice.end(),
                   [](const LatticePoint &x, const LatticePoint &y) { return x.distance < y.distance - 1e-15; });
  lattice.resize(count);
  std::sort(lattice.begin(), lattice.end(), [](const LatticePoint &x, const LatticePoint &y) { return x.order < y.order; });

  for (const LatticePoint &p : lattice) {
    const LogParams candidate{bounds.log2c.clip(center.log2c + p.offset_c), bounds.log2g.clip(center.log2g + p.offset_g)};
    if (std::none_of(out.begin(), out.end(), [&](const LogParams &q) { return same_point(q, candidate); }))
      out.push_back(candidate);
  }
  return out;
}

namespace {

struct StageOutcome {
  std::vector<std::optional<SvmModel>> models;
  std::vector<std::string> errors;
};

StageOutcome train_stage(const LabeledDataset &train, const LabeledDataset &validation,
                         const std::vector<LogParams> &points, const NudRun &run) {
  StageOutcome outcome{std::vector<std::optional<SvmModel>>(points.size()), std::vector<std::string>(points.size())};
  parallel_for(points.size(), run.threads, [&](std::size_t i) {
    try {
      SvmModel model = train_wsvm(train, points[i].to_params(), run.solver);
      model.level = run.level;
      model.quality = evaluate(model, validation);
      outcome.models[i] = std::move(model);
    } catch (const std::exception &e) {
      outcome.errors[i] = e.what();
    }
  });
  return outcome;
}

}  // namespace

NudResult nud_search(const LabeledDataset &train, const LabeledDataset &validation, std::optional<LogParams> center,
                     const NudRun &run) {
  const NudConfig &cfg = run.config;
  cfg.validate();
  NudResult result;

  auto absorb = [&](const std::vector<LogParams> &points, StageOutcome &outcome, int stage) {
    std::vector<SvmModel> stage_models;
    for (std::size_t i = 0; i < points.size(); ++i) {
      CandidateRecord record;
      record.point = points[i];
      record.stage = stage;
      if (outcome.models[i]) {
        record.quality = outcome.models[i]->quality;
        stage_models.push_back(*outcome.models[i]);
        result.models.push_back(std::move(*outcome.models[i]));
      } else {
        record.failed = true;
        record.error = outcome.errors[i];
      }
      result.candidates.push_back(std::move(record));
    }
    result.trained += points.size();
    return stage_models;
  };

  const LogParams start = center.value_or(LogParams{cfg.log2c.mid(), cfg.log2g.mid()});
  const auto stage1 = nud_candidates(start, cfg.log2c.width(), cfg.log2g.width(), cfg.stage1_points, cfg);
  StageOutcome first = train_stage(train, validation, stage1, run);
  const std::vector<SvmModel> stage1_models = absorb(stage1, first, 1);

  if (cfg.stage2_points > 0) {
    LogParams stage2_center = start;
    if (!stage1_models.empty())
      stage2_center = LogParams::from_params(stage1_models[select_best(stage1_models)].params);
    auto stage2 = nud_candidates(stage2_center, cfg.stage2_shrink * cfg.log2c.width(),
                                 cfg.stage2_shrink * cfg.log2g.width(), cfg.stage2_points, cfg);
    std::erase_if(stage2, [&](const LogParams &p) {
      return std::any_of(stage1.begin(), stage1.end(), [&](const LogParams &q) { return same_point(p, q); });
    });
    StageOutcome second = train_stage(train, validation, stage2, run);
    absorb(stage2, second, 2);
  }

  if (result.models.empty()) {
    std::string message = "every NUD candidate failed";
    for (const auto &c : result.candidates) {
      if (c.failed) {
        message += ": " + c.error;
        break;
      }
    }
    throw TrainingError(message);
  }
  result.best = select_best(result.models);
  return result;
}

}  // namespace amlsvm
