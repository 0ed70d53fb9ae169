#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dirac/catalog.hpp"

namespace dirac::zsl {

struct EszslHyper {
  double gamma = 1.0;
  double lambda = 1.0;
};

/// Bilinear compatibility x^T V a between a visual feature and a class attribute vector.
struct CompatibilityModel {
  Eigen::MatrixXd v;  // k x d
  EszslHyper hyper;
};

/// Closed-form ESZSL: V = (X^T X + gamma I)^-1 X^T Y S (S^T S + lambda I)^-1,
/// with X the m x k features, Y the m x z one-hot labels and S the z x d
/// class semantics. Both factors are solved as SPD systems.
CompatibilityModel train_eszsl(const Eigen::MatrixXd& features, const Eigen::MatrixXd& onehot,
                               const Eigen::MatrixXd& semantics, const EszslHyper& hyper);

/// Highest-scoring candidate; ties go to the lowest class id.
ClassId predict(const CompatibilityModel& model, const Eigen::VectorXd& x,
                const Eigen::MatrixXd& candidate_semantics, std::span<const ClassId> candidate_ids);

enum class SplitTag { existing, proposed };
enum class FilterTag { all, rare, common };

const char* to_string(SplitTag tag);
const char* to_string(FilterTag tag);

struct ClassAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct EvalReport {
  std::map<ClassId, ClassAccuracy> per_class;
  double mean_per_class_top1 = 0.0;
  std::size_t n_test_samples = 0;
  SplitTag split = SplitTag::existing;
  FilterTag filter = FilterTag::all;
  /// A filtered report whose filter matched no class; the mean is meaningless.
  bool empty = false;

  void recompute_mean();
};

/// Accuracy per class, then the unweighted mean across classes that have samples.
EvalReport per_class_top1(std::span<const ClassId> predictions, std::span<const ClassId> truths,
                          const ClassSet& classes);

/// sample id -> predicted class, from JSON lines {"sample_id": .., "predicted_class_id": ..}.
std::map<SampleId, ClassId> load_external_predictions(const std::filesystem::path& path);

struct EvaluateOptions {
  EszslHyper hyper;
  /// Scores these predictions instead of training the built-in model.
  std::optional<std::map<SampleId, ClassId>> external_predictions;
  /// Reject a seen set that intersects U_com.
  bool enforce_protocol = true;
};

/// Trains on the seen classes of `which` and predicts U_com samples among U_com candidates.
EvalReport evaluate_split(const catalog::SplitDefinition& split, SplitTag which, const catalog::ClassCatalog& catalog,
                          const catalog::FeatureStore& store, const EvaluateOptions& options);

/// Lower-level form: arbitrary seen and test class sets.
EvalReport evaluate_classes(const ClassSet& seen, const ClassSet& test, const catalog::ClassCatalog& catalog,
                            const catalog::FeatureStore& store, const EvaluateOptions& options);

nlohmann::json to_json(const EvalReport& report, const catalog::ClassCatalog& catalog);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report, const catalog::ClassCatalog& catalog);

}  // namespace dirac::zsl
