#include "amlsvm/cli/commands.hpp"
#include "amlsvm/error.hpp"
#include "amlsvm/recovery.hpp"

#include "doctest.h"
#include "drop_instance.hpp"
#include "synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using namespace amlsvm;
using namespace amlsvm::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("amlsvm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(std::vector<std::string> args, std::string *out_text = nullptr, std::string *err_text = nullptr) {
  args.insert(args.begin(), "amlsvm");
  std::vector<char *> argv;
  for (auto &a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

const fs::path &small_twonorm() {
  static const fs::path path = [] {
    const fs::path p = scratch("data") / "twonorm_small.libsvm";
    synthetic::write_libsvm(synthetic::twonorm(5, 330, 270), p);
    return p;
  }();
  return path;
}

std::vector<std::string> small_train_args(const fs::path &out) {
  return {"train", small_twonorm().string(), "--kfold", "3", "--coarsest-size", "40", "--theta", "400",
          "--threads", "2", "--out-dir", out.string()};
}

}  // namespace

TEST_CASE("kfold 1 is a usage error") {
  std::string err;
  CHECK(run({"train", small_twonorm().string(), "--kfold", "1", "--out-dir", scratch("k1").string()}, nullptr, &err) ==
        kUsageError);
  CHECK(err.find("kfold") != std::string::npos);
}

TEST_CASE("usage and data errors map to exit codes") {
  CHECK(run({}) == kUsageError);
  CHECK(run({"train"}) == kUsageError);
  CHECK(run({"train", "x.libsvm", "--format", "xml"}) == kUsageError);
  CHECK(run({"train", "x.libsvm", "--theta", "10"}) == kUsageError);
  CHECK(run({"train", "/nonexistent/x.libsvm", "--out-dir", scratch("missing").string()}) == kDataError);
  CHECK(run({"predict", "/nonexistent/model.json", small_twonorm().string()}) == kDataError);
  CHECK(run({"report", "/nonexistent/trace.jsonl"}) == kDataError);
  std::string help;
  CHECK(run({"--help"}, &help) == kSuccess);
  CHECK(help.find("train") != std::string::npos);
}

TEST_CASE("train writes the run directory and reruns are byte-identical") {
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  REQUIRE(run(small_train_args(a)) == kSuccess);
  REQUIRE(run(small_train_args(b)) == kSuccess);
  for (const char *f : {"config.json", "summary.json", "fold_0/model.json", "fold_1/trace.jsonl", "fold_2/model.json"})
    CHECK(slurp(a / f) == slurp(b / f));
  CHECK(fs::exists(a / "timing.json"));
  CHECK(slurp(a / "summary.json").find("seconds") == std::string::npos);

  const auto summary = nlohmann::ordered_json::parse(slurp(a / "summary.json"));
  CHECK(summary["folds"].size() == 3);
  CHECK(summary["mean"]["Gmean"].get<double>() > 0.9);
  CHECK(summary["config"] == nlohmann::ordered_json::parse(slurp(a / "config.json")));

  const ModelFile model = ModelFile::load(a / "fold_1" / "model.json");
  CHECK(model.config.to_json() == summary["config"]);
  CHECK(model.provenance.fold == 1);
  CHECK(model.provenance.dataset_hash == fnv1a_hex(small_twonorm()));
}

TEST_CASE("thread count does not change results") {
  const fs::path a = scratch("threads_a");
  const fs::path b = scratch("threads_b");
  auto args = small_train_args(a);
  REQUIRE(run(args) == kSuccess);
  args = small_train_args(b);
  args[args.size() - 3] = "1";
  REQUIRE(run(args) == kSuccess);
  CHECK(slurp(a / "fold_0" / "trace.jsonl") == slurp(b / "fold_0" / "trace.jsonl"));
  CHECK(slurp(a / "fold_2" / "trace.jsonl") == slurp(b / "fold_2" / "trace.jsonl"));
}

TEST_CASE("model files round-trip byte for byte") {
  const fs::path dir = scratch("roundtrip");
  REQUIRE(run(small_train_args(dir)) == kSuccess);
  const fs::path first = dir / "fold_0" / "model.json";
  const fs::path second = dir / "copy.json";
  ModelFile::load(first).save(second);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("predicting the training file reproduces the stored dataset metrics") {
  const fs::path dir = scratch("predict");
  REQUIRE(run(small_train_args(dir)) == kSuccess);
  const fs::path model = dir / "fold_2" / "model.json";
  const fs::path out = dir / "pred.csv";
  REQUIRE(run({"predict", model.string(), small_twonorm().string(), "--out", out.string()}) == kSuccess);
  const ModelFile file = ModelFile::load(model);
  const PredictResult r = cmd_predict(model, small_twonorm(), {}, nullptr, std::cout);
  REQUIRE(r.metrics.has_value());
  const QualityMetrics &stored = file.evaluations.at("dataset");
  CHECK(r.metrics->tp == stored.tp);
  CHECK(r.metrics->tn == stored.tn);
  CHECK(r.metrics->fp == stored.fp);
  CHECK(r.metrics->fn == stored.fn);
  CHECK(r.metrics->gmean == stored.gmean);

  const std::string csv = slurp(out);
  CHECK(csv.rfind("label,decision_value\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == 601);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const std::string label = line.substr(0, line.find(','));
    CHECK((label == "1" || label == "2"));
  }
}

TEST_CASE("unlabeled CSV gives predictions without metrics") {
  const fs::path dir = scratch("unlabeled");
  REQUIRE(run(small_train_args(dir)) == kSuccess);
  const RawTable t = synthetic::twonorm(99, 5, 5);
  const fs::path csv = dir / "points.csv";
  synthetic::write_csv(t, csv, true, false);
  PredictOptions opts;
  opts.format = FileFormat::csv;
  opts.csv = CsvOptions{true, std::nullopt};
  const PredictResult r = cmd_predict(dir / "fold_0" / "model.json", csv, opts, nullptr, std::cout);
  CHECK(r.predictions.labels.size() == 10);
  CHECK_FALSE(r.metrics.has_value());

  const fs::path out = dir / "pred.csv";
  std::string text;
  CHECK(run({"predict", (dir / "fold_0" / "model.json").string(), csv.string(), "--format", "csv", "--csv-header",
             "--no-labels", "--out", out.string()},
            &text) == kSuccess);
  CHECK(text.find("Gmean") == std::string::npos);
  CHECK(fs::exists(out));
}

TEST_CASE("corrupted, mismatched and wrong-version models are rejected cleanly") {
  const fs::path dir = scratch("corrupt");
  REQUIRE(run(small_train_args(dir)) == kSuccess);
  const fs::path good = dir / "fold_0" / "model.json";
  const std::string text = slurp(good);

  const fs::path truncated = dir / "truncated.json";
  std::ofstream(truncated, std::ios::binary) << text.substr(0, text.size() / 2);
  std::string err;
  CHECK(run({"predict", truncated.string(), small_twonorm().string()}, nullptr, &err) == kDataError);
  CHECK_FALSE(err.empty());

  auto doc = nlohmann::ordered_json::parse(text);
  doc["format_version"] = 99;
  const fs::path version = dir / "version.json";
  std::ofstream(version, std::ios::binary) << doc.dump();
  CHECK_THROWS_AS(ModelFile::load(version), DataError);

  doc = nlohmann::ordered_json::parse(text);
  doc["model"]["support_vectors"][0].push_back(1.0);
  const fs::path dim = dir / "dim.json";
  std::ofstream(dim, std::ios::binary) << doc.dump();
  CHECK_THROWS_AS(ModelFile::load(dim), DataError);

  const fs::path wide = dir / "wide.libsvm";
  std::ofstream(wide) << "1 25:1.0\n2 1:1.0\n";
  CHECK(run({"predict", good.string(), wide.string()}) == kDataError);
}

TEST_CASE("folds keep training, validation and test ids apart") {
  const LabeledDataset data = load_dataset(small_twonorm(), FileFormat::libsvm);
  RunConfig cfg;
  cfg.kfold = 3;
  cfg.coarsening.coarsest_size = 40;
  cfg.refinement.theta = 400;
  const SplitPlan plan = make_split_plan(data, cfg.kfold, cfg.seed);
  const FoldOutcome o = run_fold(data, plan, 1, cfg);
  const std::set<std::size_t> finest(o.finest_ids.begin(), o.finest_ids.end());
  const std::set<std::size_t> test(o.test_ids.begin(), o.test_ids.end());
  for (std::size_t id : o.validation_ids) {
    CHECK(finest.count(id) == 0);
    CHECK(test.count(id) == 0);
  }
  for (std::size_t id : o.test_ids) CHECK(finest.count(id) == 0);
  CHECK(finest.size() + o.validation_ids.size() + o.test_ids.size() == data.size());
  for (const LevelSolution &s : o.pipeline.levels)
    if (s.level == 1)
      for (std::size_t r : s.training_rows) CHECK(finest.count(o.finest_ids[r]) == 1);
}

TEST_CASE("report: one row per level record and per-level means") {
  const fs::path dir = scratch("report");
  const fs::path trace = dir / "trace.jsonl";
  std::ofstream(trace) << R"({"type":"level","fold":0,"level":3,"trained":true,"Gmean":0.8,"SN":0.7,"SP":0.9,"nSV":10,"recovered":false,"early_stop":false})"
                       << "\n"
                       << R"({"type":"candidate","fold":0,"level":3})"
                       << "\n"
                       << R"({"type":"level","fold":0,"level":2,"trained":true,"Gmean":0.9,"SN":0.9,"SP":0.9,"nSV":12,"recovered":false,"early_stop":false})"
                       << "\n"
                       << R"({"type":"level","fold":0,"level":1,"trained":false,"Gmean":null,"recovered":false,"early_stop":true})"
                       << "\n";
  const Report r = cmd_report({trace});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.table_csv ==
        "level,fold,Gmean,SN,SP,nSV,recovered,early_stop\n"
        "3,0,0.800000,0.700000,0.900000,10,false,false\n"
        "2,0,0.900000,0.900000,0.900000,12,false,false\n"
        "1,0,,,,,false,true\n");

  std::vector<fs::path> folds;
  for (int f = 0; f < 5; ++f) {
    const fs::path p = dir / ("fold" + std::to_string(f) + ".jsonl");
    std::ofstream(p) << R"({"type":"level","fold":)" << f << R"(,"level":2,"trained":true,"Gmean":)" << 0.5 + 0.1 * f
                     << R"(,"SN":0.5,"SP":0.5,"nSV":)" << 10 * f << R"(,"recovered":false,"early_stop":false})" << "\n";
    folds.push_back(p);
  }
  const Report agg = cmd_report(folds);
  CHECK(agg.summary_csv.find("2,5,0.700000,0.500000,0.900000,0.500000,0.500000,20.000000,0,0\n") != std::string::npos);
}

TEST_CASE("report: malformed traces name the file") {
  const fs::path dir = scratch("bad_report");
  const fs::path bad = dir / "broken.jsonl";
  std::ofstream(bad) << "{\"type\":\"level\",\n";
  CHECK_THROWS_WITH_AS(cmd_report({bad}), doctest::Contains("broken.jsonl"), DataError);
  const fs::path missing_field = dir / "partial.jsonl";
  std::ofstream(missing_field) << R"({"type":"level","fold":0})" << "\n";
  CHECK_THROWS_WITH_AS(cmd_report({missing_field}), doctest::Contains("partial.jsonl"), DataError);
}

TEST_CASE("report marks the recovered drop level and nothing else") {
  const drop::TwoLevel two = drop::two_level();
  const LabeledDataset validation = drop::validation();
  PipelineConfig cfg;
  cfg.refinement.theta = 1000;
  RecoveryState state;
  state.q_max = 1.0;

  FoldOutcome outcome;
  LevelSolution coarse = two.coarse;
  coarse.best->quality = QualityMetrics::from_counts(2, 2, 0, 0);
  LevelSolution fine = refine_level(two.hierarchy, 0, two.coarse, validation, state, cfg);
  REQUIRE(fine.recovery.accepted);
  outcome.pipeline.levels = {coarse, fine};
  outcome.pipeline.final_model = *fine.best;

  const fs::path dir = scratch("recovered");
  const fs::path trace = dir / "trace.jsonl";
  std::ofstream out(trace);
  for (const auto &rec : trace_records(outcome)) out << rec.dump() << "\n";
  out.close();
  const Report r = cmd_report({trace});
  REQUIRE(r.rows.size() == 2);
  for (const ReportRow &row : r.rows) CHECK(row.recovered == (row.level == 1));
}
