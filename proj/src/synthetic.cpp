#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "dirac/catalog.hpp"
#include "dirac/error.hpp"

namespace dirac::catalog {

namespace {

constexpr double kIntraStd = 0.03;
constexpr double kFeatureScale = 3.0;
constexpr double kFeatureNoise = 0.6;
constexpr int kMaxCentroidTries = 1000;

[[noreturn]] void infeasible(const std::string& what) {
  throw Error(ErrorKind::config, "catalog", "synthetic: " + what);
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu", prefix, i);
  return buf;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticParams& p) {
  if (p.n_classes < 2) infeasible("need at least 2 classes");
  if (p.n_clusters < 1 || p.n_clusters > p.n_classes) infeasible("n_clusters must be in [1, n_classes]");
  if (p.rare_attr_count >= p.d_attrs) infeasible("rare_attr_count must leave at least one regular attribute");
  if (p.k_dim == 0 || p.images_per_class == 0) infeasible("k_dim and images_per_class must be positive");
  if (p.unseen_fraction < 0.0 || p.unseen_fraction > 1.0) infeasible("unseen_fraction must be in [0, 1]");

  // A rare column is nonzero for at most ceil(5% of classes) of them; at least two
  // holders are needed so that one of them clears the nonzero-mean threshold.
  const auto holders = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(p.n_classes)));
  if (p.rare_attr_count > 0 && holders < 2) infeasible("too few classes to plant rare attributes");

  std::mt19937_64 rng(p.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t n = p.n_classes;
  const std::size_t d_regular = p.d_attrs - p.rare_attr_count;

  SyntheticDataset out;

  // Cluster membership: balanced, shuffled over class ids.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  out.cluster_of.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) out.cluster_of[order[i]] = i % p.n_clusters;

  // Cluster centroids over the regular attributes, rejection-sampled for separation.
  const double min_sep = 5.0 * kIntraStd * std::sqrt(static_cast<double>(d_regular));
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(p.n_clusters), static_cast<Eigen::Index>(d_regular));
  for (std::size_t c = 0; c < p.n_clusters; ++c) {
    int tries = 0;
    while (true) {
      for (std::size_t a = 0; a < d_regular; ++a) {
        const bool high = unit(rng) < 0.5;
        centroids(c, a) = high ? 0.55 + 0.35 * unit(rng) : 0.05 + 0.25 * unit(rng);
      }
      bool separated = true;
      for (std::size_t o = 0; o < c && separated; ++o) {
        separated = (centroids.row(c) - centroids.row(o)).norm() >= min_sep;
      }
      if (separated) break;
      if (++tries > kMaxCentroidTries) infeasible("cannot separate cluster centroids");
    }
  }

  AttributeMatrix attrs;
  attrs.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p.d_attrs));
  for (std::size_t i = 0; i < n; ++i) {
    attrs.class_names.push_back(numbered("class", i));
    for (std::size_t a = 0; a < d_regular; ++a) {
      const double v = centroids(out.cluster_of[i], a) + kIntraStd * gauss(rng);
      attrs.values(i, a) = std::clamp(v, 0.01, 1.0);
    }
  }
  for (std::size_t a = 0; a < p.d_attrs; ++a) attrs.attribute_names.push_back(numbered("attr", a));

  // Rare columns: one strong holder and a few weak ones, spread over distinct classes when possible.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::size_t next = 0;
  for (std::size_t r = 0; r < p.rare_attr_count; ++r) {
    const std::size_t col = d_regular + r;
    out.rare_attributes.push_back(col);
    for (std::size_t h = 0; h < holders; ++h) {
      if (next == n) {
        std::shuffle(pool.begin(), pool.end(), rng);
        next = 0;
      }
      const std::size_t cls = pool[next++];
      attrs.values(cls, col) = h == 0 ? 0.8 + 0.2 * unit(rng) : 0.2 + 0.2 * unit(rng);
    }
  }

  // Rarity predicate: strictly fewer than 5% of classes exceed the column's nonzero mean.
  for (std::size_t col : out.rare_attributes) {
    const auto column = attrs.values.col(static_cast<Eigen::Index>(col));
    const double nonzero = static_cast<double>((column.array() != 0.0).count());
    const double mean = column.sum() / nonzero;
    const auto support = (column.array() > mean).count();
    if (!(static_cast<double>(support) < 0.05 * static_cast<double>(n))) {
      infeasible("planted rare attribute " + std::to_string(col) + " is not rare");
    }
  }

  // Features: linear image of the semantics plus isotropic noise.
  Eigen::MatrixXd projection(static_cast<Eigen::Index>(p.d_attrs), static_cast<Eigen::Index>(p.k_dim));
  for (Eigen::Index r = 0; r < projection.rows(); ++r) {
    for (Eigen::Index c = 0; c < projection.cols(); ++c) {
      projection(r, c) = gauss(rng) / std::sqrt(static_cast<double>(p.d_attrs));
    }
  }
  const Eigen::MatrixXd class_means = kFeatureScale * attrs.values * projection;

  FeatureStore store;
  store.features.resize(static_cast<Eigen::Index>(n * p.images_per_class), static_cast<Eigen::Index>(p.k_dim));
  store.labels.reserve(n * p.images_per_class);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < p.images_per_class; ++s, ++row) {
      store.labels.push_back(static_cast<ClassId>(i));
      for (std::size_t j = 0; j < p.k_dim; ++j) {
        store.features(row, static_cast<Eigen::Index>(j)) =
            static_cast<float>(class_means(i, j) + kFeatureNoise * gauss(rng));
      }
    }
  }

  // Predetermined unseen set.
  std::vector<std::size_t> shuffled(n);
  std::iota(shuffled.begin(), shuffled.end(), 0);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto n_unseen = static_cast<std::size_t>(std::lround(p.unseen_fraction * static_cast<double>(n)));
  std::vector<SidecarEntry> sidecar(n);
  for (std::size_t i = 0; i < n; ++i) sidecar[i].name = attrs.class_names[i];
  for (std::size_t i = 0; i < n_unseen; ++i) sidecar[shuffled[i]].existing_unseen = true;

  out.catalog = build_catalog(std::move(attrs), sidecar, &store);
  out.features = std::move(store);
  return out;
}

}  // namespace dirac::catalog
