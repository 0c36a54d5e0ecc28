#include "amlsvm/cli/run_config.hpp"

#include "amlsvm/error.hpp"

namespace amlsvm::cli {

using json = nlohmann::ordered_json;

void RunConfig::validate() const {
  if (kfold < 2) throw ConfigError("--kfold must be at least 2");
  if (knn < 1) throw ConfigError("--knn must be at least 1");
  if (coarsening.coarsest_size < 1) throw ConfigError("--coarsest-size must be at least 1");
  if (!(coarsening.eta > 0.0)) throw ConfigError("--eta must be positive");
  if (!(coarsening.seed_threshold >= 0.0 && coarsening.seed_threshold < 1.0))
    throw ConfigError("--q-seed must lie in [0, 1)");
  if (coarsening.interpolation_order < 1) throw ConfigError("--interp-order must be at least 1");
  refinement.validate(coarsening.coarsest_size);
  nud.validate();
  if (!(val_min_ratio > 0.0 && val_min_ratio <= 1.0) || !(val_maj_ratio > 0.0 && val_maj_ratio <= 1.0))
    throw ConfigError("validation ratios must lie in (0, 1]");
  if (threads < 1) throw ConfigError("--threads must be at least 1");
  if (!(solver.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
}

PipelineConfig RunConfig::pipeline() const { return PipelineConfig{nud, refinement, solver, threads}; }

json RunConfig::to_json() const {
  json j;
  j["format"] = format == FileFormat::libsvm ? "libsvm" : "csv";
  j["csv"] = {{"header", csv.has_header},
              {"label_column", csv.label_column ? json(*csv.label_column) : json(nullptr)}};
  j["kfold"] = kfold;
  j["seed"] = seed;
  j["knn"] = knn;
  j["coarsening"] = {{"M", coarsening.coarsest_size},
                     {"eta", coarsening.eta},
                     {"q_seed", coarsening.seed_threshold},
                     {"interp_order", coarsening.interpolation_order},
                     {"stall_factor", coarsening.stall_factor},
                     {"normalized_points", coarsening.normalized_points}};
  j["refinement"] = {{"theta", refinement.theta},
                     {"delta", refinement.delta},
                     {"p", refinement.positive_neighbors},
                     {"n", refinement.negative_neighbors},
                     {"recovery", refinement.recovery}};
  j["nud"] = {{"log2c", {nud.log2c.lo, nud.log2c.hi}},
              {"log2g", {nud.log2g.lo, nud.log2g.hi}},
              {"stage1", nud.stage1_points},
              {"stage2", nud.stage2_points},
              {"shrink", nud.stage2_shrink}};
  j["solver"] = {{"tolerance", solver.tolerance},
                 {"max_iterations", solver.max_iterations},
                 {"cache_bytes", solver.cache_bytes}};
  j["validation"] = {{"min_ratio", val_min_ratio}, {"maj_ratio", val_maj_ratio}};
  j["threads"] = threads;
  j["dump_graph"] = dump_graph;
  j["dump_hierarchy"] = dump_hierarchy;
  return j;
}

RunConfig RunConfig::from_json(const json &j) {
  RunConfig c;
  try {
    const std::string format = j.at("format").get<std::string>();
    if (format != "libsvm" && format != "csv") throw ConfigError("unknown format '" + format + "'");
    c.format = format == "libsvm" ? FileFormat::libsvm : FileFormat::csv;
    c.csv.has_header = j.at("csv").at("header").get<bool>();
    const auto &label_column = j.at("csv").at("label_column");
    c.csv.label_column = label_column.is_null() ? std::nullopt : std::optional<int>(label_column.get<int>());
    c.kfold = j.at("kfold").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.knn = j.at("knn").get<std::size_t>();
    const auto &co = j.at("coarsening");
    c.coarsening.coarsest_size = co.at("M").get<std::size_t>();
    c.coarsening.eta = co.at("eta").get<double>();
    c.coarsening.seed_threshold = co.at("q_seed").get<double>();
    c.coarsening.interpolation_order = co.at("interp_order").get<std::size_t>();
    c.coarsening.stall_factor = co.at("stall_factor").get<double>();
    c.coarsening.normalized_points = co.at("normalized_points").get<bool>();
    const auto &re = j.at("refinement");
    c.refinement.theta = re.at("theta").get<std::size_t>();
    c.refinement.delta = re.at("delta").get<double>();
    c.refinement.positive_neighbors = re.at("p").get<std::size_t>();
    c.refinement.negative_neighbors = re.at("n").get<std::size_t>();
    c.refinement.recovery = re.at("recovery").get<bool>();
    const auto &nu = j.at("nud");
    c.nud.log2c = {nu.at("log2c").at(0).get<double>(), nu.at("log2c").at(1).get<double>()};
    c.nud.log2g = {nu.at("log2g").at(0).get<double>(), nu.at("log2g").at(1).get<double>()};
    c.nud.stage1_points = nu.at("stage1").get<std::size_t>();
    c.nud.stage2_points = nu.at("stage2").get<std::size_t>();
    c.nud.stage2_shrink = nu.at("shrink").get<double>();
    const auto &so = j.at("solver");
    c.solver.tolerance = so.at("tolerance").get<double>();
    c.solver.max_iterations = so.at("max_iterations").get<std::size_t>();
    c.solver.cache_bytes = so.at("cache_bytes").get<std::size_t>();
    c.val_min_ratio = j.at("validation").at("min_ratio").get<double>();
    c.val_maj_ratio = j.at("validation").at("maj_ratio").get<double>();
    c.threads = j.at("threads").get<unsigned>();
    c.dump_graph = j.at("dump_graph").get<bool>();
    c.dump_hierarchy = j.at("dump_hierarchy").get<bool>();
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid run configuration: ") + e.what());
  }
  return c;
}

}  // namespace amlsvm::cli
