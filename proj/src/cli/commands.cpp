#include "amlsvm/cli/commands.hpp"

#include "amlsvm/error.hpp"
#include "amlsvm/knn_graph.hpp"
#include "amlsvm/model_eval.hpp"
#include "amlsvm/parallel.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace amlsvm::cli {

using json = nlohmann::ordered_json;

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(fold) + 1));
}

FoldOutcome run_fold(const LabeledDataset &data, const SplitPlan &plan, std::size_t fold, const RunConfig &cfg) {
  FoldOutcome outcome;
  outcome.fold = fold;
  const std::vector<std::size_t> train_rows = plan.train_rows(fold);
  const std::vector<std::size_t> test_rows = plan.test_rows(fold);
  LabeledDataset train = data.subset(train_rows);
  LabeledDataset test = data.subset(test_rows);
  outcome.normalization = compute_normalization(train.points);
  apply_normalization(train.points, outcome.normalization);
  apply_normalization(test.points, outcome.normalization);
  outcome.train_size = train.size();
  outcome.test_size = test.size();
  outcome.test_ids = test.ids;

  const ValidationSample sample = sample_validation(train, cfg.val_min_ratio, cfg.val_maj_ratio, fold_seed(cfg.seed, fold));
  const LabeledDataset validation = train.subset(sample.rows);
  outcome.validation_size = validation.size();
  outcome.validation_ids = validation.ids;

  std::vector<char> held_out(train.size(), 0);
  for (std::size_t r : sample.rows) held_out[r] = 1;
  std::vector<std::size_t> positive_rows;
  std::vector<std::size_t> negative_rows;
  for (std::size_t r = 0; r < train.size(); ++r) {
    if (held_out[r]) continue;
    (train.labels[r] > 0 ? positive_rows : negative_rows).push_back(r);
  }
  if (positive_rows.empty() || negative_rows.empty())
    throw DataError("fold " + std::to_string(fold) + ": a class has no training points left after validation sampling");
  for (std::size_t r : positive_rows) outcome.finest_ids.push_back(train.ids[r]);
  for (std::size_t r : negative_rows) outcome.finest_ids.push_back(train.ids[r]);

  const ExactNeighborSearch search(cfg.threads);
  auto class_graph = [&](const std::vector<std::size_t> &rows, Matrix &points) {
    points = train.points.select_rows(rows);
    const std::vector<double> volumes(rows.size(), 1.0);
    return build_knn_graph(points, volumes, cfg.knn, &search);
  };
  Matrix positive_points;
  Matrix negative_points;
  ProximityGraph positive_graph = class_graph(positive_rows, positive_points);
  ProximityGraph negative_graph = class_graph(negative_rows, negative_points);
  outcome.hierarchy = build_hierarchy(positive_points, std::move(positive_graph), negative_points,
                                      std::move(negative_graph), cfg.coarsening);

  outcome.pipeline = run_pipeline(outcome.hierarchy, validation, cfg.pipeline());
  outcome.test = evaluate(outcome.pipeline.final_model, test);
  return outcome;
}

std::vector<json> trace_records(const FoldOutcome &outcome) {
  std::vector<json> records;
  for (const LevelSolution &sol : outcome.pipeline.levels) {
    json rec;
    rec["type"] = "level";
    rec["fold"] = outcome.fold;
    rec["level"] = sol.level;
    rec["level_sizes"] = {{"positive", sol.level_positive}, {"negative", sol.level_negative}};
    rec["sizes"] = {{"positive", sol.training_positive},
                    {"negative", sol.training_negative},
                    {"total", sol.training_positive + sol.training_negative}};
    rec["trained"] = sol.trained();
    if (sol.best) {
      const SvmModel &m = *sol.best;
      rec["C"] = m.params.c;
      rec["gamma"] = m.params.gamma;
      rec["ACC"] = m.quality.acc;
      rec["SN"] = m.quality.sn;
      rec["SP"] = m.quality.sp;
      rec["Gmean"] = m.quality.gmean;
      rec["nSV"] = m.nsv;
    } else {
      for (const char *key : {"C", "gamma", "ACC", "SN", "SP", "Gmean", "nSV"}) rec[key] = nullptr;
    }
    rec["nud_models"] = sol.search.trained;
    rec["recovered"] = sol.recovery.accepted;
    rec["early_stop"] = sol.early_stop;
    rec["q_max"] = sol.q_max_after;
    rec["recovery"] = {{"triggered", sol.recovery.triggered},
                       {"false_positives", sol.recovery.false_positives},
                       {"false_negatives", sol.recovery.false_negatives},
                       {"added", sol.recovery.added},
                       {"q_before", sol.recovery.q_before},
                       {"q_after", sol.recovery.q_after},
                       {"accepted", sol.recovery.accepted},
                       {"models", sol.recovery.models_trained}};
    records.push_back(std::move(rec));

    for (const CandidateRecord &c : sol.search.candidates) {
      json cand;
      cand["type"] = "candidate";
      cand["fold"] = outcome.fold;
      cand["level"] = sol.level;
      cand["stage"] = c.stage;
      cand["log2c"] = c.point.log2c;
      cand["log2g"] = c.point.log2g;
      cand["failed"] = c.failed;
      cand["Gmean"] = c.failed ? json(nullptr) : json(c.quality.gmean);
      records.push_back(std::move(cand));
    }
  }
  json fin;
  fin["type"] = "final";
  fin["fold"] = outcome.fold;
  fin["level"] = outcome.pipeline.final_level();
  fin["early_stop_level"] = outcome.pipeline.early_stop_level ? json(*outcome.pipeline.early_stop_level) : json(nullptr);
  fin["nSV"] = outcome.pipeline.final_model.nsv;
  fin["validation"] = metrics_to_json(outcome.pipeline.final_model.quality);
  fin["test"] = metrics_to_json(outcome.test);
  records.push_back(std::move(fin));
  return records;
}

namespace {

void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

TrainSummary cmd_train(const std::filesystem::path &dataset, const RunConfig &cfg, const std::filesystem::path &out_dir,
                       std::ostream &log) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  LabelMap label_map;
  LabeledDataset data = load_dataset(dataset, cfg.format, cfg.csv, &label_map);
  const std::string hash = fnv1a_hex(dataset);
  const SplitPlan plan = make_split_plan(data, cfg.kfold, cfg.seed);

  // Full-file view normalized per fold, for "predict on the training file" checks.
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "config.json", cfg.to_json().dump(2) + "\n");

  TrainSummary summary;
  json folds = json::array();
  std::vector<double> fold_seconds;
  for (std::size_t fold = 0; fold < cfg.kfold; ++fold) {
    const auto fold_start = std::chrono::steady_clock::now();
    FoldOutcome outcome = run_fold(data, plan, fold, cfg);
    fold_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - fold_start).count());

    const std::filesystem::path fold_dir = out_dir / ("fold_" + std::to_string(fold));
    std::filesystem::create_directories(fold_dir);

    ModelFile file;
    file.config = cfg;
    file.normalization = outcome.normalization;
    file.labels = label_map;
    file.model = outcome.pipeline.final_model;
    file.provenance = {outcome.pipeline.final_level(), fold, hash, data.dim()};
    file.evaluations["validation"] = outcome.pipeline.final_model.quality;
    file.evaluations["test"] = outcome.test;
    LabeledDataset whole = data;
    apply_normalization(whole.points, outcome.normalization);
    file.evaluations["dataset"] = evaluate(file.model, whole);
    file.save(fold_dir / "model.json");

    std::string trace;
    for (const json &rec : trace_records(outcome)) trace += rec.dump() + "\n";
    write_text(fold_dir / "trace.jsonl", trace);
    if (cfg.dump_hierarchy) {
      std::ostringstream h;
      outcome.hierarchy.write_trace(h);
      write_text(fold_dir / "hierarchy.jsonl", h.str());
    }
    if (cfg.dump_graph) {
      std::ostringstream pos, neg;
      outcome.hierarchy.positive.front().graph.write_edge_list(pos);
      outcome.hierarchy.negative.front().graph.write_edge_list(neg);
      write_text(fold_dir / "graph_positive.txt", pos.str());
      write_text(fold_dir / "graph_negative.txt", neg.str());
    }

    json f;
    f["fold"] = fold;
    f["levels"] = outcome.hierarchy.level_count();
    f["final_level"] = outcome.pipeline.final_level();
    f["early_stop_level"] = outcome.pipeline.early_stop_level ? json(*outcome.pipeline.early_stop_level) : json(nullptr);
    f["nSV"] = outcome.pipeline.final_model.nsv;
    f["C"] = outcome.pipeline.final_model.params.c;
    f["gamma"] = outcome.pipeline.final_model.params.gamma;
    f["sizes"] = {{"train", outcome.train_size}, {"validation", outcome.validation_size}, {"test", outcome.test_size}};
    f["validation"] = metrics_to_json(outcome.pipeline.final_model.quality);
    f["test"] = metrics_to_json(outcome.test);
    folds.push_back(f);

    log << "fold " << fold << ": levels=" << outcome.hierarchy.level_count()
        << " final_level=" << outcome.pipeline.final_level() << " nSV=" << outcome.pipeline.final_model.nsv
        << std::fixed << std::setprecision(4) << " test ACC=" << outcome.test.acc << " SN=" << outcome.test.sn
        << " SP=" << outcome.test.sp << " Gmean=" << outcome.test.gmean << std::defaultfloat << " ("
        << std::setprecision(3) << fold_seconds.back() << "s)\n";
    summary.folds.push_back(std::move(outcome));
  }

  QualityMetrics mean;
  for (const FoldOutcome &o : summary.folds) {
    mean.tp += o.test.tp;
    mean.tn += o.test.tn;
    mean.fp += o.test.fp;
    mean.fn += o.test.fn;
    mean.acc += o.test.acc;
    mean.sn += o.test.sn;
    mean.sp += o.test.sp;
    mean.gmean += o.test.gmean;
  }
  const auto k = static_cast<double>(summary.folds.size());
  mean.acc /= k;
  mean.sn /= k;
  mean.sp /= k;
  mean.gmean /= k;
  summary.mean = mean;
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json doc;
  doc["dataset"] = {{"path", dataset.filename().string()},
                    {"hash", hash},
                    {"points", data.size()},
                    {"features", data.dim()},
                    {"positive", data.count(1)},
                    {"negative", data.count(-1)},
                    {"labels", {{"positive", label_map.positive}, {"negative", label_map.negative}}}};
  doc["config"] = cfg.to_json();
  doc["folds"] = folds;
  doc["mean"] = {{"ACC", mean.acc}, {"SN", mean.sn}, {"SP", mean.sp}, {"Gmean", mean.gmean}};
  summary.document = doc;
  write_text(out_dir / "summary.json", doc.dump(2) + "\n");
  write_text(out_dir / "timing.json", json{{"seconds", summary.seconds}, {"fold_seconds", fold_seconds}}.dump(2) + "\n");

  log << std::fixed << std::setprecision(4) << "mean test ACC=" << mean.acc << " SN=" << mean.sn << " SP=" << mean.sp
      << " Gmean=" << mean.gmean << std::defaultfloat << " wall=" << std::setprecision(3) << summary.seconds << "s\n";
  return summary;
}

PredictResult cmd_predict(const std::filesystem::path &model_path, const std::filesystem::path &dataset,
                          const PredictOptions &options, const std::filesystem::path *out, std::ostream &log) {
  const ModelFile file = ModelFile::load(model_path);
  const FileFormat format = options.format.value_or(file.config.format);
  const CsvOptions csv = options.csv.value_or(file.config.csv);
  RawTable table = load_table(dataset, format, csv, format == FileFormat::libsvm ? file.model.dim() : 0);
  if (table.points.cols() != file.model.dim())
    throw DataError("dataset has " + std::to_string(table.points.cols()) + " features, model expects " +
                    std::to_string(file.model.dim()));
  apply_normalization(table.points, file.normalization);

  PredictResult result;
  result.predictions = predict(file.model, table.points);
  if (table.labeled()) {
    const LabeledDataset labeled = to_labeled(table, file.labels);
    result.metrics = confusion(labeled.labels, result.predictions.labels);
  }
  if (out) {
    std::ostringstream rows;
    rows << "label,decision_value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < result.predictions.labels.size(); ++i)
      rows << (result.predictions.labels[i] > 0 ? file.labels.positive : file.labels.negative) << ','
           << result.predictions.decision_values[i] << '\n';
    write_text(*out, rows.str());
  }
  if (result.metrics) log << metrics_to_json(*result.metrics).dump(2) << '\n';
  return result;
}

Report cmd_report(const std::vector<std::filesystem::path> &traces) {
  if (traces.empty()) throw DataError("report needs at least one trace file");
  Report report;
  for (const auto &path : traces) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trace " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json rec = json::parse(line);
        if (rec.at("type").get<std::string>() != "level") continue;
        ReportRow row;
        row.level = rec.at("level").get<std::size_t>();
        row.fold = rec.at("fold").get<std::size_t>();
        row.trained = rec.at("trained").get<bool>();
        if (row.trained) {
          row.gmean = rec.at("Gmean").get<double>();
          row.sn = rec.at("SN").get<double>();
          row.sp = rec.at("SP").get<double>();
          row.nsv = rec.at("nSV").get<std::size_t>();
        }
        row.recovered = rec.at("recovered").get<bool>();
        row.early_stop = rec.at("early_stop").get<bool>();
        report.rows.push_back(row);
      } catch (const nlohmann::json::exception &e) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed trace record (" + e.what() + ")");
      }
    }
  }

  std::ostringstream table;
  table << std::fixed << std::setprecision(6) << "level,fold,Gmean,SN,SP,nSV,recovered,early_stop\n";
  for (const ReportRow &r : report.rows) {
    table << r.level << ',' << r.fold << ',';
    if (r.trained) {
      table << r.gmean << ',' << r.sn << ',' << r.sp << ',' << r.nsv;
    } else {
      table << ",,,";
    }
    table << ',' << (r.recovered ? "true" : "false") << ',' << (r.early_stop ? "true" : "false") << '\n';
  }
  report.table_csv = table.str();

  struct Aggregate {
    std::size_t count = 0;
    double sum = 0.0, min = 1.0, max = 0.0, sn = 0.0, sp = 0.0, nsv = 0.0;
    std::size_t recovered = 0, early_stop = 0;
  };
  std::map<std::size_t, Aggregate, std::greater<>> levels;  // coarsest first
  for (const ReportRow &r : report.rows) {
    Aggregate &a = levels[r.level];
    a.recovered += r.recovered ? 1 : 0;
    a.early_stop += r.early_stop ? 1 : 0;
    if (!r.trained) continue;
    ++a.count;
    a.sum += r.gmean;
    a.min = std::min(a.min, r.gmean);
    a.max = std::max(a.max, r.gmean);
    a.sn += r.sn;
    a.sp += r.sp;
    a.nsv += static_cast<double>(r.nsv);
  }
  std::ostringstream summary;
  summary << std::fixed << std::setprecision(6)
          << "level,trained,Gmean_mean,Gmean_min,Gmean_max,SN_mean,SP_mean,nSV_mean,recovered,early_stop\n";
  for (const auto &[level, a] : levels) {
    summary << level << ',' << a.count << ',';
    if (a.count > 0) {
      const auto n = static_cast<double>(a.count);
      summary << a.sum / n << ',' << a.min << ',' << a.max << ',' << a.sn / n << ',' << a.sp / n << ',' << a.nsv / n;
    } else {
      summary << ",,,,,";
    }
    summary << ',' << a.recovered << ',' << a.early_stop << '\n';
  }
  report.summary_csv = summary.str();
  return report;
}

// --- command line -------------------------------------------------------------------------------

namespace {

void add_training_options(CLI::App &cmd, RunConfig &cfg, std::string &format, std::vector<double> &log2c,
                          std::vector<double> &log2g, bool &no_recovery, bool &literal_points, int &label_column) {
  cmd.add_option("--format", format, "Input format")->check(CLI::IsMember({"libsvm", "csv"}));
  cmd.add_flag("--csv-header", cfg.csv.has_header, "CSV has a header row");
  cmd.add_option("--label-column", label_column, "CSV label column (negative counts from the end)");
  cmd.add_option("--kfold", cfg.kfold, "Number of cross-validation folds");
  cmd.add_option("--seed", cfg.seed, "Random seed for splits and validation sampling");
  cmd.add_option("--knn", cfg.knn, "Neighbors per point in the proximity graph");
  cmd.add_option("--coarsest-size", cfg.coarsening.coarsest_size, "Per-class coarsest size M");
  cmd.add_option("--eta", cfg.coarsening.eta, "Future-volume pre-seeding factor");
  cmd.add_option("--q-seed", cfg.coarsening.seed_threshold, "Seed coupling threshold Q");
  cmd.add_option("--interp-order", cfg.coarsening.interpolation_order, "Interpolation order r");
  cmd.add_flag("--literal-points", literal_points, "Aggregate points as the raw P-weighted sum");
  cmd.add_option("--theta", cfg.refinement.theta, "Early-stopping training size");
  cmd.add_option("--delta", cfg.refinement.delta, "Significant G-mean drop");
  cmd.add_option("--p", cfg.refinement.positive_neighbors, "Positive neighbors per misclassified point");
  cmd.add_option("--n", cfg.refinement.negative_neighbors, "Negative neighbors per misclassified point");
  cmd.add_option("--val-min-ratio", cfg.val_min_ratio, "Minority validation sampling ratio");
  cmd.add_option("--val-maj-ratio", cfg.val_maj_ratio, "Majority validation sampling ratio");
  cmd.add_option("--log2c-range", log2c, "log2 C search range lo,hi")->expected(2)->delimiter(',');
  cmd.add_option("--log2g-range", log2g, "log2 gamma search range lo,hi")->expected(2)->delimiter(',');
  cmd.add_option("--nud-stage1", cfg.nud.stage1_points, "NUD stage-1 points");
  cmd.add_option("--nud-stage2", cfg.nud.stage2_points, "NUD stage-2 points");
  cmd.add_flag("--no-recovery", no_recovery, "Disable quality-drop recovery");
  cmd.add_option("--threads", cfg.threads, "Concurrent trainings");
  cmd.add_flag("--dump-graph", cfg.dump_graph, "Write finest-level k-NN edge lists");
  cmd.add_flag("--dump-hierarchy", cfg.dump_hierarchy, "Write per-level coarsening statistics");
}

FileFormat parse_format(const std::string &s) { return s == "csv" ? FileFormat::csv : FileFormat::libsvm; }

}  // namespace

int run_cli(int argc, char **argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Adaptive multilevel weighted SVM"};
  app.require_subcommand(1);

  RunConfig cfg;
  cfg.threads = default_thread_count();
  std::string train_format = "libsvm";
  std::vector<double> log2c, log2g;
  bool no_recovery = false;
  bool literal_points = false;
  int label_column = 0;
  std::string dataset;
  std::string out_dir = "amlsvm_out";
  CLI::App *train = app.add_subcommand("train", "Cross-validated multilevel training");
  train->add_option("dataset", dataset, "Dataset file")->required();
  train->add_option("--out-dir", out_dir, "Output directory");
  add_training_options(*train, cfg, train_format, log2c, log2g, no_recovery, literal_points, label_column);

  std::string model_path, predict_data, predict_out, predict_format;
  bool no_labels = false;
  bool predict_header = false;
  int predict_label_column = 0;
  CLI::App *pred = app.add_subcommand("predict", "Apply a saved model");
  pred->add_option("model", model_path, "Model file")->required();
  pred->add_option("dataset", predict_data, "Dataset file")->required();
  pred->add_option("--out", predict_out, "Predictions CSV");
  pred->add_option("--format", predict_format, "Input format")->check(CLI::IsMember({"libsvm", "csv"}));
  pred->add_flag("--csv-header", predict_header, "CSV has a header row");
  CLI::Option *pred_label = pred->add_option("--label-column", predict_label_column, "CSV label column");
  pred->add_flag("--no-labels", no_labels, "CSV has no label column");

  std::vector<std::string> traces;
  std::string report_out, report_summary;
  CLI::App *rep = app.add_subcommand("report", "Per-level quality table from traces");
  rep->add_option("traces", traces, "trace.jsonl files")->required();
  rep->add_option("--out", report_out, "Write the per-level rows CSV here");
  rep->add_option("--summary-out", report_summary, "Write the per-level aggregate CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (*train) {
      cfg.format = parse_format(train_format);
      if (train->count("--label-column") > 0) cfg.csv.label_column = label_column;
      if (log2c.size() == 2) cfg.nud.log2c = {log2c[0], log2c[1]};
      if (log2g.size() == 2) cfg.nud.log2g = {log2g[0], log2g[1]};
      cfg.refinement.recovery = !no_recovery;
      cfg.coarsening.normalized_points = !literal_points;
      cfg.validate();
      (void)cmd_train(dataset, cfg, out_dir, out);
    } else if (*pred) {
      PredictOptions options;
      if (!predict_format.empty()) options.format = parse_format(predict_format);
      if (predict_header || no_labels || pred_label->count() > 0) {
        CsvOptions csv;
        csv.has_header = predict_header;
        csv.label_column = no_labels ? std::nullopt : std::optional<int>(predict_label_column);
        options.csv = csv;
      }
      const std::filesystem::path out_path(predict_out);
      (void)cmd_predict(model_path, predict_data, options, predict_out.empty() ? nullptr : &out_path, out);
    } else if (*rep) {
      const std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
      const Report report = cmd_report(paths);
      if (report_out.empty()) {
        out << report.table_csv;
      } else {
        std::ofstream(report_out, std::ios::binary) << report.table_csv;
      }
      if (report_summary.empty()) {
        out << '\n' << report.summary_csv;
      } else {
        std::ofstream(report_summary, std::ios::binary) << report.summary_csv;
      }
    }
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception &e) {
    err << "training error: " << e.what() << '\n';
    return kTrainingError;
  }
  return kSuccess;
}

}  // namespace amlsvm::cli
