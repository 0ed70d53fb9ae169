#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dirac/catalog.hpp"
#include "dirac/seedset.hpp"

namespace dirac::vsm {

/// Samples queried per iteration: max(5, ceil(3 ln a)) for `a` images per class on average.
std::size_t compute_t(double avg_images_per_class);

struct HeadTraining {
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
};

/// Softmax classification layer over frozen features.
struct LinearHead {
  Eigen::MatrixXd weights;  // classes x k
  Eigen::VectorXd bias;
  std::vector<ClassId> class_order;
  double training_accuracy = 0.0;

  /// Pre-softmax logits, one row per input row.
  Eigen::MatrixXd activations(const Eigen::MatrixXd& features) const;
};

struct LossGradient {
  double loss = 0.0;
  Eigen::MatrixXd d_weights;
  Eigen::VectorXd d_bias;
};

/// Mean softmax cross-entropy and its gradient. `targets[i]` indexes a weight row.
LossGradient softmax_loss_gradient(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                                   const Eigen::MatrixXd& features, std::span<const std::size_t> targets);

/// Seeded mini-batch gradient descent with momentum, starting from a small
/// random initialisation. Deterministic for a given seed.
LinearHead train_linear_head(const Eigen::MatrixXd& features, std::span<const std::size_t> targets,
                             std::vector<ClassId> class_order, const HeadTraining& training,
                             std::uint64_t rng_seed);

/// Trains on every sample of `classes`; row order of the head follows `classes`.
LinearHead train_linear_head(const catalog::FeatureStore& store, const std::vector<ClassId>& classes,
                             const HeadTraining& training, std::uint64_t rng_seed);

struct MavSet {
  Eigen::MatrixXd means;  // one row per head class, in head order
  std::vector<std::size_t> support;
  std::vector<bool> fallback;  // no sample was classified correctly; mean over all samples
};

MavSet compute_mavs(const Eigen::MatrixXd& activations, std::span<const std::size_t> targets,
                    std::size_t n_classes);

/// lambda * ||mu - f|| / scale + (1 - lambda) * (1 - cos(mu, f)). The cosine
/// term is 1 when either vector is zero.
double euclidean_cosine_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& f, double blend,
                                 double euclid_scale);

struct DistanceConfig {
  double blend = 0.5;
  double euclid_scale = 1.0;
};

/// Median pairwise Euclidean distance between MAVs, or 1 with fewer than two
/// MAVs or a zero median.
double median_mav_distance(const MavSet& mavs);

struct DiversityRanking {
  std::vector<double> pi;  // min distance to any MAV, per pool sample
  std::vector<SampleId> selected;
  ClassSet candidates;
};

DiversityRanking diversity_select(const MavSet& mavs, const Eigen::MatrixXd& pool_activations,
                                  std::span<const SampleId> pool_ids, std::span<const ClassId> pool_labels,
                                  std::size_t t, const DistanceConfig& distance);

/// Image-weighted attribute frequencies over the seed classes and their
/// -ln weights. Absent attributes get the cap weight ln(1 + total images).
seedset::AttributeWeights vsm_attribute_weights(const Eigen::MatrixXd& seed_semantics,
                                                std::span<const std::uint64_t> image_counts);

Eigen::VectorXd semantic_scores(const Eigen::MatrixXd& candidate_semantics, const seedset::AttributeWeights& weights);

struct Candidate {
  ClassId id = 0;
  double score = 0.0;
  bool overlaps_pretraining = false;
};

/// Orders by (overlap flag, score desc, id asc) and keeps min(q, |H|, capacity).
std::vector<ClassId> admit_candidates(std::vector<Candidate> candidates, std::size_t q, std::size_t capacity);

struct VsmConfig {
  std::size_t q = 2;
  std::size_t t = 13;
  HeadTraining head;
  double distance_blend = 0.5;
  std::uint64_t rng_seed = 0;
};

struct VsmIteration {
  std::size_t iteration = 0;
  std::vector<ClassId> seed_snapshot;
  std::vector<SampleId> queried;
  std::vector<Candidate> candidates;
  std::vector<ClassId> admitted;
  std::vector<double> weights;
  double training_accuracy = 0.0;
  double euclid_scale = 1.0;
  std::size_t cumulative_queried = 0;
  bool pool_exhausted = false;
};

struct VsmResult {
  seedset::SeedSet seeds;
  std::vector<VsmIteration> trace;
  std::size_t total_queried = 0;
};

/// Grows `seed` inside `domain` until it holds `target` classes.
VsmResult run_vsm(const seedset::SeedSet& seed, const catalog::ClassCatalog& catalog,
                  const catalog::FeatureStore& store, const ClassSet& domain, const VsmConfig& config,
                  std::size_t target);

nlohmann::json to_json(const VsmIteration& it);

}  // namespace dirac::vsm
