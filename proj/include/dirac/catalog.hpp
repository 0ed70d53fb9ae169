#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace dirac {

using ClassId = std::uint32_t;
using SampleId = std::uint64_t;

/// Sorted, duplicate-free list of class ids.
using ClassSet = std::vector<ClassId>;

ClassSet make_class_set(std::vector<ClassId> ids);
bool contains(const ClassSet& set, ClassId id);
ClassSet set_union(const ClassSet& a, const ClassSet& b);
ClassSet set_intersection(const ClassSet& a, const ClassSet& b);
ClassSet set_difference(const ClassSet& a, const ClassSet& b);

}  // namespace dirac

namespace dirac::catalog {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Class-by-attribute strengths. Row r describes the class with id r.
struct AttributeMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> class_names;
  std::vector<std::string> attribute_names;

  std::size_t num_classes() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_attributes() const { return static_cast<std::size_t>(values.cols()); }

  /// Attribute columns that are zero for every class. Flagged, never rejected.
  std::vector<std::size_t> zero_columns() const;
};

AttributeMatrix load_attribute_matrix(const std::filesystem::path& path);
void write_attribute_matrix(const std::filesystem::path& path, const AttributeMatrix& m);

/// Divides every entry by scale_max. Throws if an entry lies outside [0, scale_max].
AttributeMatrix normalize_attributes(const AttributeMatrix& m, double scale_max);

/// Per-image feature vectors. Sample ids are the record positions in the file.
struct FeatureStore {
  FeatureMatrix features;  // n x k
  std::vector<ClassId> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  std::vector<std::uint64_t> class_counts(std::size_t num_classes) const;
  /// Sample ids whose label is in `classes`, ascending.
  std::vector<SampleId> samples_of(const ClassSet& classes) const;
};

/// Reads the DRCF binary feature format. Labels must be < num_classes.
FeatureStore load_feature_store(const std::filesystem::path& path, std::size_t num_classes);
void write_feature_store(const std::filesystem::path& path, const FeatureStore& store);

struct ClassInfo {
  ClassId id = 0;
  std::string name;
  std::uint64_t image_count = 1;
  bool overlaps_pretraining = false;
  bool existing_unseen = false;  // member of the predetermined unseen set U_E
};

/// Immutable description of a dataset's classes plus their attribute matrix.
struct ClassCatalog {
  std::vector<ClassInfo> classes;
  AttributeMatrix attributes;

  std::size_t size() const { return classes.size(); }
  const ClassInfo& at(ClassId id) const { return classes.at(id); }
  ClassSet all_classes() const;
  ClassSet existing_unseen() const;
  ClassSet existing_seen() const;
  /// Attribute rows of `ids`, in the given order.
  Eigen::MatrixXd semantics(std::span<const ClassId> ids) const;
};

/// Entry of the `key = value` catalog sidecar.
struct SidecarEntry {
  std::string name;
  std::optional<std::uint64_t> image_count;
  bool overlaps_pretraining = false;
  bool existing_unseen = false;
};

std::vector<SidecarEntry> load_catalog_sidecar(const std::filesystem::path& path);
void write_catalog_sidecar(const std::filesystem::path& path, const ClassCatalog& catalog);

/// Joins attributes, optional sidecar metadata and optional features into a
/// catalog. Image counts come from the features when present, then from the
/// sidecar, and otherwise default to 1 with a warning.
ClassCatalog build_catalog(AttributeMatrix attributes,
                           const std::vector<SidecarEntry>& sidecar,
                           const FeatureStore* store);

/// Seen/unseen partition of a dataset under the common-unseen protocol.
struct SplitDefinition {
  ClassSet seen_existing;     // S_E
  ClassSet unseen_existing;   // U_E
  ClassSet common_unseen;     // U_com
  ClassSet remaining_unseen;  // U_E minus U_com
  ClassSet seen_proposed;     // S_P, empty before mining
  std::uint64_t rng_seed = 0;

  /// Classes available to the selector: S_E united with the remaining unseen half.
  ClassSet object_domain() const { return set_union(seen_existing, remaining_unseen); }
  /// Throws a protocol error when an invariant does not hold.
  void validate() const;
};

/// Randomly sends floor(|U_E| / 2) classes to U_com and the rest to the
/// remaining half. Deterministic for a given seed.
std::pair<ClassSet, ClassSet> split_unseen(const ClassSet& unseen_existing, std::uint64_t rng_seed);

SplitDefinition make_split(const ClassCatalog& catalog, std::uint64_t rng_seed);

nlohmann::json to_json(const SplitDefinition& split, const ClassCatalog& catalog);
SplitDefinition split_from_json(const nlohmann::json& j);

struct SyntheticParams {
  std::size_t n_classes = 40;
  std::size_t d_attrs = 20;
  std::size_t k_dim = 16;
  std::size_t n_clusters = 5;
  std::size_t rare_attr_count = 3;
  std::size_t images_per_class = 30;
  std::uint64_t rng_seed = 7;
  /// Fraction of classes flagged as members of U_E.
  double unseen_fraction = 0.25;
};

struct SyntheticDataset {
  ClassCatalog catalog;
  FeatureStore features;
  std::vector<std::size_t> cluster_of;      // planted cluster of each class
  std::vector<std::size_t> rare_attributes; // planted rare columns
};

/// Planted-structure fixture: well separated semantic blobs, a few rare
/// attribute columns, and class-conditional visual features that are a
/// linear image of the semantics plus noise.
SyntheticDataset generate_synthetic(const SyntheticParams& params);

}  // namespace dirac::catalog
