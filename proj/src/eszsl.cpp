#include "dirac/error.hpp"
#include "dirac/zsl.hpp"

namespace dirac::zsl {

CompatibilityModel train_eszsl(const Eigen::MatrixXd& features, const Eigen::MatrixXd& onehot,
                               const Eigen::MatrixXd& semantics, const EszslHyper& hyper) {
  if (features.rows() != onehot.rows() || onehot.cols() != semantics.rows()) {
    throw Error(ErrorKind::config, "zsl-eval", "inconsistent ESZSL dimensions");
  }
  if (!(hyper.gamma > 0.0) || !(hyper.lambda > 0.0)) {
    throw Error(ErrorKind::config, "zsl-eval", "ESZSL gamma and lambda must be positive");
  }
  const Eigen::Index k = features.cols();
  const Eigen::Index d = semantics.cols();

  Eigen::MatrixXd visual = features.transpose() * features;
  visual.diagonal().array() += hyper.gamma;
  Eigen::MatrixXd semantic = semantics.transpose() * semantics;
  semantic.diagonal().array() += hyper.lambda;
  const Eigen::MatrixXd rhs = features.transpose() * (onehot * semantics);  // k x d

  const Eigen::LLT<Eigen::MatrixXd> visual_llt(visual);
  const Eigen::LLT<Eigen::MatrixXd> semantic_llt(semantic);
  if (visual_llt.info() != Eigen::Success || semantic_llt.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, "zsl-eval", "ESZSL normal equations are not positive definite");
  }
  const Eigen::MatrixXd left = visual_llt.solve(rhs);
  CompatibilityModel model;
  model.v = semantic_llt.solve(left.transpose()).transpose();
  model.hyper = hyper;
  if (model.v.rows() != k || model.v.cols() != d || !model.v.allFinite()) {
    throw Error(ErrorKind::numerical, "zsl-eval", "ESZSL solve failed");
  }
  return model;
}

ClassId predict(const CompatibilityModel& model, const Eigen::VectorXd& x, const Eigen::MatrixXd& candidate_semantics,
                std::span<const ClassId> candidate_ids) {
  if (candidate_ids.empty()) throw Error(ErrorKind::config, "zsl-eval", "no candidate classes");
  if (static_cast<std::size_t>(candidate_semantics.rows()) != candidate_ids.size() ||
      candidate_semantics.cols() != model.v.cols() || x.size() != model.v.rows()) {
    throw Error(ErrorKind::config, "zsl-eval", "prediction dimensions do not match the model");
  }
  const Eigen::VectorXd scores = candidate_semantics * (model.v.transpose() * x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidate_ids.size(); ++c) {
    const double s = scores(static_cast<Eigen::Index>(c));
    const double b = scores(static_cast<Eigen::Index>(best));
    if (s > b || (s == b && candidate_ids[c] < candidate_ids[best])) best = c;
  }
  return candidate_ids[best];
}

}  // namespace dirac::zsl
