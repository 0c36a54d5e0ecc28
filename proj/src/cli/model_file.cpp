#include "amlsvm/cli/model_file.hpp"

#include "amlsvm/error.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

namespace amlsvm::cli {

using json = nlohmann::ordered_json;

json metrics_to_json(const QualityMetrics &m) {
  return {{"TP", m.tp}, {"TN", m.tn}, {"FP", m.fp}, {"FN", m.fn},
          {"ACC", m.acc}, {"SN", m.sn}, {"SP", m.sp}, {"Gmean", m.gmean}};
}

QualityMetrics metrics_from_json(const json &j) {
  QualityMetrics m;
  m.tp = j.at("TP").get<std::size_t>();
  m.tn = j.at("TN").get<std::size_t>();
  m.fp = j.at("FP").get<std::size_t>();
  m.fn = j.at("FN").get<std::size_t>();
  m.acc = j.at("ACC").get<double>();
  m.sn = j.at("SN").get<double>();
  m.sp = j.at("SP").get<double>();
  m.gmean = j.at("Gmean").get<double>();
  return m;
}

json ModelFile::to_json() const {
  json j;
  j["format_version"] = format_version;
  j["config"] = config.to_json();
  j["normalization"] = {{"mean", normalization.mean}, {"stddev", normalization.stddev}};
  j["labels"] = {{"positive", labels.positive}, {"negative", labels.negative}};
  j["provenance"] = {{"level", provenance.level},
                     {"fold", provenance.fold},
                     {"dataset_hash", provenance.dataset_hash},
                     {"feature_count", provenance.feature_count}};

  json sv = json::array();
  for (std::size_t s = 0; s < model.support_vectors.rows(); ++s) {
    const auto row = model.support_vectors.row(s);
    sv.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["model"] = {{"C", model.params.c},
                {"gamma", model.params.gamma},
                {"bias", model.bias},
                {"nSV", model.nsv},
                {"dim", model.dim()},
                {"level", model.level},
                {"training_size", model.training_size},
                {"objective", model.objective},
                {"iterations", model.iterations},
                {"converged", model.converged},
                {"quality", metrics_to_json(model.quality)},
                {"coefficients", model.coefficients},
                {"sv_labels", model.sv_labels},
                {"sv_ids", model.sv_ids},
                {"support_vectors", sv}};
  json ev = json::object();
  for (const auto &[name, m] : evaluations) ev[name] = metrics_to_json(m);
  j["evaluations"] = ev;
  return j;
}

ModelFile ModelFile::from_json(const json &j) {
  ModelFile f;
  try {
    f.format_version = j.at("format_version").get<int>();
    if (f.format_version != kModelFormatVersion)
      throw DataError("unsupported model format version " + std::to_string(f.format_version));
    f.config = RunConfig::from_json(j.at("config"));
    f.normalization.mean = j.at("normalization").at("mean").get<std::vector<double>>();
    f.normalization.stddev = j.at("normalization").at("stddev").get<std::vector<double>>();
    f.labels.positive = j.at("labels").at("positive").get<std::string>();
    f.labels.negative = j.at("labels").at("negative").get<std::string>();
    const auto &pv = j.at("provenance");
    f.provenance.level = pv.at("level").get<std::size_t>();
    f.provenance.fold = pv.at("fold").get<std::size_t>();
    f.provenance.dataset_hash = pv.at("dataset_hash").get<std::string>();
    f.provenance.feature_count = pv.at("feature_count").get<std::size_t>();

    const auto &m = j.at("model");
    SvmModel &model = f.model;
    model.params = {m.at("C").get<double>(), m.at("gamma").get<double>()};
    model.bias = m.at("bias").get<double>();
    model.nsv = m.at("nSV").get<std::size_t>();
    const auto dim = m.at("dim").get<std::size_t>();
    model.level = m.at("level").get<int>();
    model.training_size = m.at("training_size").get<std::size_t>();
    model.objective = m.at("objective").get<double>();
    model.iterations = m.at("iterations").get<std::size_t>();
    model.converged = m.at("converged").get<bool>();
    model.quality = metrics_from_json(m.at("quality"));
    model.coefficients = m.at("coefficients").get<std::vector<double>>();
    model.sv_labels = m.at("sv_labels").get<std::vector<int>>();
    model.sv_ids = m.at("sv_ids").get<std::vector<std::size_t>>();
    model.support_vectors = Matrix(0, dim);
    for (const auto &row : m.at("support_vectors")) {
      const auto values = row.get<std::vector<double>>();
      if (values.size() != dim) throw DataError("support vector has wrong dimension");
      model.support_vectors.append_row(values);
    }
    if (model.support_vectors.rows() != model.nsv || model.coefficients.size() != model.nsv ||
        model.sv_labels.size() != model.nsv || model.sv_ids.size() != model.nsv)
      throw DataError("support vector arrays disagree with nSV");
    if (f.normalization.mean.size() != dim || f.normalization.stddev.size() != dim)
      throw DataError("normalization statistics disagree with model dimension");
    for (const auto &[name, metrics] : j.at("evaluations").items()) f.evaluations[name] = metrics_from_json(metrics);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  return f;
}

void ModelFile::save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump(1) << '\n';
}

ModelFile ModelFile::load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string fnv1a_hex(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t hash = 14695981039346656037ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    hash ^= static_cast<unsigned char>(*it);
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace amlsvm::cli
