#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dirac/catalog.hpp"
#include "dirac/hac.hpp"

namespace dirac::seedset {

/// Flat clustering of the object domain. Indices refer to rows of the
/// domain semantic matrix.
struct ClusterPartition {
  std::size_t n_clusters = 0;
  std::vector<std::size_t> assignment;
  std::vector<std::size_t> singletons;  // rows alone in their cluster
  double silhouette = 0.0;
  /// Mean silhouette for every evaluated cluster count, ascending in count.
  std::vector<std::pair<std::size_t, double>> sweep;

  std::vector<std::vector<std::size_t>> members() const;
};

ClusterPartition make_partition(std::vector<std::size_t> assignment);

/// Cuts one Ward tree at every count in [max(2, lower_bound), n - 1] and
/// keeps the cut with the largest mean silhouette (ties toward fewer clusters).
ClusterPartition optimal_cluster_count(const Eigen::MatrixXd& semantics, std::size_t lower_bound);

/// Cluster-restricted attribute filtering. Attributes that are zero for
/// every member are irrelevant; attributes whose binarised column is all
/// zero are unremarkable. An entry binarises to 1 only when it strictly
/// exceeds the mean of the column's nonzero entries.
struct ClusterAttributeView {
  std::vector<std::size_t> irrelevant;
  std::vector<std::size_t> unremarkable;
  std::vector<std::size_t> retained;    // original attribute index of each kept column
  Eigen::MatrixXd binary;               // members x retained, entries 0/1
  Eigen::MatrixXd retained_semantics;   // members x retained
};

/// Builds the view without rejecting anything; `retained` may be empty.
ClusterAttributeView binarize_attributes(const Eigen::MatrixXd& cluster_semantics);

/// As binarize_attributes, but a cluster with no retained attribute is an error.
ClusterAttributeView filter_cluster_attributes(const Eigen::MatrixXd& cluster_semantics);

struct AttributeWeights {
  std::vector<double> theta;
  std::vector<double> weight;
};

/// theta = column support of the binary matrix over the member count, weight = -ln(theta).
AttributeWeights rarity_weights(const ClusterAttributeView& view);

enum class ProvenanceKind { cluster_representative, outlier, vsm_iteration };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::cluster_representative;
  std::size_t index = 0;         // cluster index or VSM iteration
  bool centroid_fallback = false;  // representative chosen by distance to the centroid
};

struct SeedSet {
  std::vector<ClassId> members;
  std::vector<Provenance> provenance;

  std::size_t size() const { return members.size(); }
  bool has(ClassId id) const;
  void add(ClassId id, Provenance p);
};

/// One representative per cluster: singletons are taken as outliers, other
/// clusters contribute the member maximising the rarity-weighted attribute
/// mass. `domain` gives the class id of each semantics row, ascending.
SeedSet select_representatives(std::span<const ClassId> domain, const Eigen::MatrixXd& domain_semantics,
                               const ClusterPartition& partition);

struct Stage1Result {
  ClusterPartition partition;
  SeedSet seeds;
};

Stage1Result build_seed_set(const catalog::ClassCatalog& catalog, const ClassSet& domain,
                            std::size_t lower_bound = 5);

const char* to_string(ProvenanceKind kind);

nlohmann::json to_json(const Stage1Result& result, const ClassSet& domain, const catalog::ClassCatalog& catalog);
nlohmann::json to_json(const SeedSet& seeds, const catalog::ClassCatalog& catalog);
SeedSet seed_set_from_json(const nlohmann::json& j);

}  // namespace dirac::seedset
