#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dirac/catalog.hpp"
#include "dirac/zsl.hpp"

namespace dirac::rarity {

struct Thresholds {
  double rare = 0.05;    // support strictly below this fraction of classes
  double common = 0.50;  // support strictly above this fraction of classes
};

/// Domain-level attribute designation. Indices are attribute columns.
struct RarityDesignation {
  std::vector<std::size_t> rare;
  std::vector<std::size_t> common;
  std::vector<std::size_t> neither;
  std::vector<std::size_t> discarded;  // irrelevant or unremarkable over the whole domain
  std::vector<std::size_t> support;    // binarised support of every attribute (0 for discarded)
};

/// Treats the whole domain as one cluster, binarises it, and splits the
/// surviving attributes by their support.
RarityDesignation designate_rare_common(const Eigen::MatrixXd& domain_semantics, const Thresholds& thresholds = {});

/// Restricts `report` to classes whose raw attribute row is positive on at
/// least one rare (or common) attribute. An empty result is marked `empty`.
zsl::EvalReport rare_filtered_report(const zsl::EvalReport& report, const RarityDesignation& designation,
                                     const catalog::ClassCatalog& catalog, zsl::FilterTag mode);

/// Test classes exhibiting at least one designated attribute of the given kind (Y_R or Y_C).
std::size_t exhibiting_count(const ClassSet& classes, const RarityDesignation& designation,
                             const catalog::ClassCatalog& catalog, zsl::FilterTag mode);

nlohmann::json to_json(const RarityDesignation& designation, const catalog::AttributeMatrix& attributes);

struct SummaryRow {
  std::string split;
  std::size_t rare = 0;
  std::size_t common = 0;
  std::size_t rare_classes = 0;
  std::size_t common_classes = 0;
};

/// CSV with columns split,A_R,A_C,Y_R,Y_C.
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

}  // namespace dirac::rarity
