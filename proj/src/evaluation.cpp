#include <algorithm>
#include <fstream>

#include "dirac/error.hpp"
#include "dirac/zsl.hpp"

namespace dirac::zsl {

const char* to_string(SplitTag tag) { return tag == SplitTag::existing ? "ES" : "PS"; }

const char* to_string(FilterTag tag) {
  switch (tag) {
    case FilterTag::all:
      return "all";
    case FilterTag::rare:
      return "rare";
    case FilterTag::common:
      return "common";
  }
  return "unknown";
}

void EvalReport::recompute_mean() {
  n_test_samples = 0;
  double sum = 0.0;
  for (const auto& [id, acc] : per_class) {
    sum += acc.accuracy();
    n_test_samples += acc.total;
  }
  mean_per_class_top1 = per_class.empty() ? 0.0 : sum / static_cast<double>(per_class.size());
}

EvalReport per_class_top1(std::span<const ClassId> predictions, std::span<const ClassId> truths,
                          const ClassSet& classes) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorKind::config, "zsl-eval", "prediction and truth counts differ");
  }
  EvalReport report;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!contains(classes, truths[i])) {
      throw Error(ErrorKind::data_format, "zsl-eval", "truth label " + std::to_string(truths[i]) + " is not a test class");
    }
    auto& acc = report.per_class[truths[i]];
    ++acc.total;
    if (predictions[i] == truths[i]) ++acc.correct;
  }
  report.recompute_mean();
  return report;
}

std::map<SampleId, ClassId> load_external_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data_format, "zsl-eval", "cannot open " + path.string());
  std::map<SampleId, ClassId> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out[j.at("sample_id").get<SampleId>()] = j.at("predicted_class_id").get<ClassId>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::data_format, "zsl-eval",
                  "predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

EvalReport evaluate_classes(const ClassSet& seen, const ClassSet& test, const catalog::ClassCatalog& catalog,
                            const catalog::FeatureStore& store, const EvaluateOptions& options) {
  if (options.enforce_protocol && !set_intersection(seen, test).empty()) {
    throw Error(ErrorKind::protocol, "zsl-eval", "seen set intersects the common unseen set");
  }
  if (test.empty()) throw Error(ErrorKind::config, "zsl-eval", "no test classes");

  const auto test_ids = store.samples_of(test);
  std::vector<ClassId> truths;
  std::vector<ClassId> predictions;
  truths.reserve(test_ids.size());
  for (SampleId s : test_ids) truths.push_back(store.labels[s]);

  if (options.external_predictions) {
    for (SampleId s : test_ids) {
      auto it = options.external_predictions->find(s);
      if (it == options.external_predictions->end()) {
        throw Error(ErrorKind::data_format, "zsl-eval", "no external prediction for sample " + std::to_string(s));
      }
      predictions.push_back(it->second);
    }
  } else {
    if (seen.empty()) throw Error(ErrorKind::config, "zsl-eval", "no seen classes");
    const auto train_ids = store.samples_of(seen);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(train_ids.size()), static_cast<Eigen::Index>(store.dim()));
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), static_cast<Eigen::Index>(seen.size()));
    for (std::size_t r = 0; r < train_ids.size(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      x.row(row) = store.features.row(static_cast<Eigen::Index>(train_ids[r])).cast<double>();
      const auto pos = std::lower_bound(seen.begin(), seen.end(), store.labels[train_ids[r]]) - seen.begin();
      y(row, pos) = 1.0;
    }
    const CompatibilityModel model = train_eszsl(x, y, catalog.semantics(seen), options.hyper);
    const Eigen::MatrixXd candidates = catalog.semantics(test);
    for (SampleId s : test_ids) {
      const Eigen::VectorXd f = store.features.row(static_cast<Eigen::Index>(s)).cast<double>().transpose();
      predictions.push_back(predict(model, f, candidates, test));
    }
  }
  return per_class_top1(predictions, truths, test);
}

EvalReport evaluate_split(const catalog::SplitDefinition& split, SplitTag which, const catalog::ClassCatalog& catalog,
                          const catalog::FeatureStore& store, const EvaluateOptions& options) {
  const ClassSet& seen = which == SplitTag::existing ? split.seen_existing : split.seen_proposed;
  EvalReport report = evaluate_classes(seen, split.common_unseen, catalog, store, options);
  report.split = which;
  return report;
}

nlohmann::json to_json(const EvalReport& report, const catalog::ClassCatalog& catalog) {
  auto rows = nlohmann::json::array();
  for (const auto& [id, acc] : report.per_class) {
    rows.push_back({{"class_id", id},
                    {"name", catalog.at(id).name},
                    {"correct", acc.correct},
                    {"total", acc.total},
                    {"accuracy", acc.accuracy()}});
  }
  nlohmann::json j = {
      {"split", to_string(report.split)},
      {"filter", to_string(report.filter)},
      {"n_classes", report.per_class.size()},
      {"n_test_samples", report.n_test_samples},
      {"per_class", rows},
      {"empty", report.empty},
  };
  j["mean_per_class_top1"] = report.empty ? nlohmann::json(nullptr) : nlohmann::json(report.mean_per_class_top1);
  return j;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report, const catalog::ClassCatalog& catalog) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::data_format, "zsl-eval", "cannot write " + path.string());
  out << "class_id,name,accuracy\n";
  out.precision(17);
  for (const auto& [id, acc] : report.per_class) out << id << ',' << catalog.at(id).name << ',' << acc.accuracy() << '\n';
}

}  // namespace dirac::zsl
