#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dirac/error.hpp"
#include "dirac/vsm.hpp"

namespace dirac::vsm {

Eigen::MatrixXd LinearHead::activations(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd logits = features * weights.transpose();
  logits.rowwise() += bias.transpose();
  return logits;
}

LossGradient softmax_loss_gradient(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                                   const Eigen::MatrixXd& features, std::span<const std::size_t> targets) {
  const Eigen::Index m = features.rows();
  Eigen::MatrixXd logits = features * weights.transpose();
  logits.rowwise() += bias.transpose();

  LossGradient g;
  // Softmax probabilities, stabilised by the row maximum; turned into dL/dlogits in place.
  for (Eigen::Index i = 0; i < m; ++i) {
    const double top = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - top).exp();
    const double z = logits.row(i).sum();
    logits.row(i) /= z;
    const auto y = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)]);
    g.loss -= std::log(std::max(logits(i, y), 1e-300));
    logits(i, y) -= 1.0;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  g.loss *= inv_m;
  g.d_weights = logits.transpose() * features * inv_m;
  g.d_bias = logits.colwise().sum().transpose() * inv_m;
  return g;
}

LinearHead train_linear_head(const Eigen::MatrixXd& features, std::span<const std::size_t> targets,
                             std::vector<ClassId> class_order, const HeadTraining& training,
                             std::uint64_t rng_seed) {
  const auto n_classes = static_cast<Eigen::Index>(class_order.size());
  const Eigen::Index m = features.rows();
  const Eigen::Index k = features.cols();
  if (static_cast<std::size_t>(m) != targets.size()) {
    throw Error(ErrorKind::config, "vsm", "feature rows and targets differ in length");
  }
  std::vector<std::size_t> per_class(class_order.size(), 0);
  for (auto t : targets) {
    if (t >= class_order.size()) throw Error(ErrorKind::config, "vsm", "training target out of range");
    ++per_class[t];
  }
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] == 0) {
      throw Error(ErrorKind::data_format, "vsm", "class " + std::to_string(class_order[c]) + " has no training samples");
    }
  }
  if (training.batch_size == 0) throw Error(ErrorKind::config, "vsm", "batch size must be positive");

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> init(0.0, 0.01);

  LinearHead head;
  head.class_order = std::move(class_order);
  head.weights = Eigen::MatrixXd::NullaryExpr(n_classes, k, [&] { return init(rng); });
  head.bias = Eigen::VectorXd::Zero(n_classes);

  Eigen::MatrixXd vel_w = Eigen::MatrixXd::Zero(n_classes, k);
  Eigen::VectorXd vel_b = Eigen::VectorXd::Zero(n_classes);
  std::vector<std::size_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);

  Eigen::MatrixXd batch;
  std::vector<std::size_t> batch_targets;
  for (std::size_t epoch = 0; epoch < training.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += training.batch_size) {
      const std::size_t end = std::min(order.size(), start + training.batch_size);
      batch.resize(static_cast<Eigen::Index>(end - start), k);
      batch_targets.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.row(static_cast<Eigen::Index>(i - start)) = features.row(static_cast<Eigen::Index>(order[i]));
        batch_targets.push_back(targets[order[i]]);
      }
      const LossGradient g = softmax_loss_gradient(head.weights, head.bias, batch, batch_targets);
      vel_w = training.momentum * vel_w - training.lr * g.d_weights;
      vel_b = training.momentum * vel_b - training.lr * g.d_bias;
      head.weights += vel_w;
      head.bias += vel_b;
    }
  }
  if (!head.weights.allFinite() || !head.bias.allFinite()) {
    throw Error(ErrorKind::numerical, "vsm", "linear head diverged; lower the learning rate");
  }

  const Eigen::MatrixXd logits = head.activations(features);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (static_cast<std::size_t>(arg) == targets[static_cast<std::size_t>(i)]) ++correct;
  }
  head.training_accuracy = m == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(m);
  return head;
}

LinearHead train_linear_head(const catalog::FeatureStore& store, const std::vector<ClassId>& classes,
                             const HeadTraining& training, std::uint64_t rng_seed) {
  std::vector<std::size_t> slot(*std::max_element(classes.begin(), classes.end()) + 1, classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) slot[classes[i]] = i;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> targets;
  for (std::size_t s = 0; s < store.size(); ++s) {
    const ClassId c = store.labels[s];
    if (c < slot.size() && slot[c] < classes.size()) {
      rows.push_back(s);
      targets.push_back(slot[c]);
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(store.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = store.features.row(static_cast<Eigen::Index>(rows[r])).cast<double>();
  }
  return train_linear_head(x, targets, classes, training, rng_seed);
}

MavSet compute_mavs(const Eigen::MatrixXd& activations, std::span<const std::size_t> targets,
                    std::size_t n_classes) {
  const Eigen::Index dim = activations.cols();
  MavSet mavs;
  mavs.means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_classes), dim);
  mavs.support.assign(n_classes, 0);
  mavs.fallback.assign(n_classes, false);
  Eigen::MatrixXd all = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_classes), dim);
  std::vector<std::size_t> all_count(n_classes, 0);

  for (Eigen::Index i = 0; i < activations.rows(); ++i) {
    const std::size_t c = targets[static_cast<std::size_t>(i)];
    Eigen::Index arg = 0;
    activations.row(i).maxCoeff(&arg);
    all.row(static_cast<Eigen::Index>(c)) += activations.row(i);
    ++all_count[c];
    if (static_cast<std::size_t>(arg) == c) {
      mavs.means.row(static_cast<Eigen::Index>(c)) += activations.row(i);
      ++mavs.support[c];
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    if (mavs.support[c] > 0) {
      mavs.means.row(r) /= static_cast<double>(mavs.support[c]);
    } else {
      mavs.fallback[c] = true;
      if (all_count[c] > 0) mavs.means.row(r) = all.row(r) / static_cast<double>(all_count[c]);
    }
  }
  return mavs;
}

}  // namespace dirac::vsm
