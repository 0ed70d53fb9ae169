#include "dirac/vsm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "dirac/error.hpp"

namespace dirac::vsm {

std::size_t compute_t(double avg_images_per_class) {
  if (!(avg_images_per_class > 0.0)) throw Error(ErrorKind::config, "vsm", "average images per class must be positive");
  const double raw = std::ceil(3.0 * std::log(avg_images_per_class));
  return std::max<std::size_t>(5, raw > 0.0 ? static_cast<std::size_t>(raw) : 0);
}

double euclidean_cosine_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& f, double blend,
                                 double euclid_scale) {
  if (mu.size() != f.size()) throw Error(ErrorKind::config, "vsm", "distance between vectors of different dimension");
  const double euclid = (mu - f).norm() / euclid_scale;
  const double norms = mu.norm() * f.norm();
  const double cosine_term = norms == 0.0 ? 1.0 : std::max(0.0, 1.0 - mu.dot(f) / norms);
  return blend * euclid + (1.0 - blend) * cosine_term;
}

double median_mav_distance(const MavSet& mavs) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < mavs.means.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < mavs.means.rows(); ++j) d.push_back((mavs.means.row(i) - mavs.means.row(j)).norm());
  }
  if (d.empty()) return 1.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double median = *mid;
  if (d.size() % 2 == 0) median = 0.5 * (median + *std::max_element(d.begin(), mid));
  return median > 0.0 ? median : 1.0;
}

DiversityRanking diversity_select(const MavSet& mavs, const Eigen::MatrixXd& pool_activations,
                                  std::span<const SampleId> pool_ids, std::span<const ClassId> pool_labels,
                                  std::size_t t, const DistanceConfig& distance) {
  const auto n = static_cast<std::size_t>(pool_activations.rows());
  if (n == 0 || pool_ids.size() != n || pool_labels.size() != n) {
    throw Error(ErrorKind::config, "vsm", "diversity selection needs a nonempty, consistent pool");
  }
  if (mavs.means.rows() == 0) throw Error(ErrorKind::config, "vsm", "diversity selection needs at least one MAV");

  DiversityRanking out;
  out.pi.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::VectorXd f = pool_activations.row(static_cast<Eigen::Index>(j)).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < mavs.means.rows(); ++c) {
      best = std::min(best, euclidean_cosine_distance(mavs.means.row(c).transpose(), f, distance.blend,
                                                      distance.euclid_scale));
    }
    out.pi[j] = best;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out.pi[a] != out.pi[b]) return out.pi[a] > out.pi[b];
    return pool_ids[a] < pool_ids[b];
  });
  const std::size_t take = std::min(t, n);
  std::vector<ClassId> labels;
  for (std::size_t i = 0; i < take; ++i) {
    out.selected.push_back(pool_ids[order[i]]);
    labels.push_back(pool_labels[order[i]]);
  }
  out.candidates = make_class_set(std::move(labels));
  return out;
}

seedset::AttributeWeights vsm_attribute_weights(const Eigen::MatrixXd& seed_semantics,
                                                std::span<const std::uint64_t> image_counts) {
  if (static_cast<std::size_t>(seed_semantics.rows()) != image_counts.size()) {
    throw Error(ErrorKind::config, "vsm", "image counts do not match seed classes");
  }
  Eigen::VectorXd ic(seed_semantics.rows());
  for (std::size_t i = 0; i < image_counts.size(); ++i) ic(static_cast<Eigen::Index>(i)) = static_cast<double>(image_counts[i]);
  const double total = ic.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::config, "vsm", "seed classes have no images");

  // Image mass of each attribute: sum over classes of strength times image count.
  const Eigen::VectorXd mass = seed_semantics.transpose() * ic;
  const double cap = std::log(1.0 + total);
  seedset::AttributeWeights w;
  for (Eigen::Index l = 0; l < mass.size(); ++l) {
    const double theta = mass(l) / total;
    w.theta.push_back(theta);
    w.weight.push_back(theta > 0.0 ? -std::log(theta) : cap);
  }
  return w;
}

Eigen::VectorXd semantic_scores(const Eigen::MatrixXd& candidate_semantics, const seedset::AttributeWeights& weights) {
  if (static_cast<std::size_t>(candidate_semantics.cols()) != weights.weight.size()) {
    throw Error(ErrorKind::config, "vsm", "weight vector does not match attribute count");
  }
  const Eigen::Map<const Eigen::VectorXd> w(weights.weight.data(), static_cast<Eigen::Index>(weights.weight.size()));
  return candidate_semantics * w;
}

std::vector<ClassId> admit_candidates(std::vector<Candidate> candidates, std::size_t q, std::size_t capacity) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.overlaps_pretraining != b.overlaps_pretraining) return a.overlaps_pretraining;
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  const std::size_t take = std::min({q, candidates.size(), capacity});
  std::vector<ClassId> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(candidates[i].id);
  return out;
}

namespace {

Eigen::MatrixXd gather(const catalog::FeatureStore& store, std::span<const SampleId> ids) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(store.dim()));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    x.row(static_cast<Eigen::Index>(r)) = store.features.row(static_cast<Eigen::Index>(ids[r])).cast<double>();
  }
  return x;
}

}  // namespace

VsmResult run_vsm(const seedset::SeedSet& seed, const catalog::ClassCatalog& catalog,
                  const catalog::FeatureStore& store, const ClassSet& domain, const VsmConfig& config,
                  std::size_t target) {
  if (config.q < 1 || config.t < 1) throw Error(ErrorKind::config, "vsm", "q and t must be at least 1");
  if (config.distance_blend < 0.0 || config.distance_blend > 1.0) {
    throw Error(ErrorKind::config, "vsm", "distance blend must lie in [0, 1]");
  }
  if (target < seed.size()) throw Error(ErrorKind::config, "vsm", "target is smaller than the seed set");
  if (target > domain.size()) throw Error(ErrorKind::config, "vsm", "target exceeds the object domain");
  for (ClassId c : seed.members) {
    if (!contains(domain, c)) {
      throw Error(ErrorKind::protocol, "vsm", "seed class " + std::to_string(c) + " lies outside the object domain");
    }
  }

  std::vector<std::vector<SampleId>> samples_by_class(catalog.size());
  for (SampleId s = 0; s < store.size(); ++s) {
    if (contains(domain, store.labels[s])) samples_by_class[store.labels[s]].push_back(s);
  }
  for (ClassId c : domain) {
    if (samples_by_class[c].empty()) {
      throw Error(ErrorKind::data_format, "vsm", "class '" + catalog.at(c).name + "' has no feature samples");
    }
  }

  VsmResult result;
  result.seeds = seed;
  std::unordered_set<SampleId> queried;
  std::size_t iteration = 0;

  while (result.seeds.size() < target) {
    ++iteration;
    VsmIteration rec;
    rec.iteration = iteration;
    rec.seed_snapshot = result.seeds.members;

    // Labeled set: every sample of the current seed classes.
    std::vector<SampleId> labeled;
    std::vector<std::size_t> targets;
    for (std::size_t z = 0; z < result.seeds.size(); ++z) {
      for (SampleId s : samples_by_class[result.seeds.members[z]]) {
        labeled.push_back(s);
        targets.push_back(z);
      }
    }
    const Eigen::MatrixXd x_labeled = gather(store, labeled);
    const LinearHead head =
        train_linear_head(x_labeled, targets, result.seeds.members, config.head, config.rng_seed + iteration);
    rec.training_accuracy = head.training_accuracy;
    const MavSet mavs = compute_mavs(head.activations(x_labeled), targets, result.seeds.size());
    rec.euclid_scale = median_mav_distance(mavs);

    // Unlabeled pool: unqueried samples of domain classes outside the seed set.
    std::vector<SampleId> pool;
    std::vector<ClassId> pool_labels;
    ClassSet outside;
    for (ClassId c : domain) {
      if (result.seeds.has(c)) continue;
      outside.push_back(c);
      for (SampleId s : samples_by_class[c]) {
        if (!queried.contains(s)) {
          pool.push_back(s);
          pool_labels.push_back(c);
        }
      }
    }

    ClassSet candidates;
    if (!pool.empty()) {
      const DiversityRanking ranking = diversity_select(mavs, head.activations(gather(store, pool)), pool,
                                                        pool_labels, config.t, {config.distance_blend, rec.euclid_scale});
      for (SampleId s : ranking.selected) queried.insert(s);
      rec.queried = ranking.selected;
      candidates = ranking.candidates;
    } else {
      // Every remaining sample has been labeled already; no new queries are needed.
      rec.pool_exhausted = true;
      candidates = outside;
    }
    if (candidates.empty()) throw Error(ErrorKind::numerical, "vsm", "no candidate classes left before reaching target");

    std::vector<std::uint64_t> ic;
    for (ClassId c : result.seeds.members) ic.push_back(catalog.at(c).image_count);
    const seedset::AttributeWeights weights = vsm_attribute_weights(catalog.semantics(result.seeds.members), ic);
    const Eigen::VectorXd scores = semantic_scores(catalog.semantics(candidates), weights);
    for (std::size_t h = 0; h < candidates.size(); ++h) {
      rec.candidates.push_back(
          {candidates[h], scores(static_cast<Eigen::Index>(h)), catalog.at(candidates[h]).overlaps_pretraining});
    }
    rec.weights = weights.weight;
    rec.admitted = admit_candidates(rec.candidates, config.q, target - result.seeds.size());
    for (ClassId c : rec.admitted) {
      result.seeds.add(c, {seedset::ProvenanceKind::vsm_iteration, iteration, false});
    }
    result.total_queried += rec.queried.size();
    rec.cumulative_queried = result.total_queried;
    result.trace.push_back(std::move(rec));
  }
  return result;
}

nlohmann::json to_json(const VsmIteration& it) {
  auto candidates = nlohmann::json::array();
  for (const auto& c : it.candidates) {
    candidates.push_back({{"id", c.id}, {"score", c.score}, {"overlap", c.overlaps_pretraining}});
  }
  return {
      {"iteration", it.iteration},
      {"seed_set", it.seed_snapshot},
      {"queried", it.queried},
      {"candidates", candidates},
      {"admitted", it.admitted},
      {"weights", it.weights},
      {"training_accuracy", it.training_accuracy},
      {"euclid_scale", it.euclid_scale},
      {"cumulative_queried", it.cumulative_queried},
      {"pool_exhausted", it.pool_exhausted},
  };
}

}  // namespace dirac::vsm
