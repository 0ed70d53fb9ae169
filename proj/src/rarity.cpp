#include "dirac/rarity.hpp"

#include <algorithm>
#include <fstream>

#include "dirac/error.hpp"
#include "dirac/seedset.hpp"

namespace dirac::rarity {

RarityDesignation designate_rare_common(const Eigen::MatrixXd& domain_semantics, const Thresholds& thresholds) {
  if (domain_semantics.rows() < 1) throw Error(ErrorKind::config, "rarity", "empty object domain");
  const auto view = seedset::binarize_attributes(domain_semantics);
  const double n = static_cast<double>(domain_semantics.rows());

  RarityDesignation out;
  out.support.assign(static_cast<std::size_t>(domain_semantics.cols()), 0);
  out.discarded = view.irrelevant;
  out.discarded.insert(out.discarded.end(), view.unremarkable.begin(), view.unremarkable.end());
  std::sort(out.discarded.begin(), out.discarded.end());

  for (std::size_t j = 0; j < view.retained.size(); ++j) {
    const auto support = static_cast<std::size_t>(view.binary.col(static_cast<Eigen::Index>(j)).sum());
    const std::size_t attr = view.retained[j];
    out.support[attr] = support;
    const double s = static_cast<double>(support);
    if (s < thresholds.rare * n) {
      out.rare.push_back(attr);
    } else if (s > thresholds.common * n) {
      out.common.push_back(attr);
    } else {
      out.neither.push_back(attr);
    }
  }
  return out;
}

namespace {

bool exhibits(const catalog::ClassCatalog& catalog, ClassId id, const std::vector<std::size_t>& attrs) {
  const auto row = catalog.attributes.values.row(id);
  return std::any_of(attrs.begin(), attrs.end(), [&](std::size_t a) { return row(static_cast<Eigen::Index>(a)) > 0.0; });
}

const std::vector<std::size_t>& attributes_for(const RarityDesignation& d, zsl::FilterTag mode) {
  if (mode == zsl::FilterTag::rare) return d.rare;
  if (mode == zsl::FilterTag::common) return d.common;
  throw Error(ErrorKind::config, "rarity", "filter mode must be rare or common");
}

}  // namespace

std::size_t exhibiting_count(const ClassSet& classes, const RarityDesignation& designation,
                             const catalog::ClassCatalog& catalog, zsl::FilterTag mode) {
  const auto& attrs = attributes_for(designation, mode);
  return static_cast<std::size_t>(
      std::count_if(classes.begin(), classes.end(), [&](ClassId c) { return exhibits(catalog, c, attrs); }));
}

zsl::EvalReport rare_filtered_report(const zsl::EvalReport& report, const RarityDesignation& designation,
                                     const catalog::ClassCatalog& catalog, zsl::FilterTag mode) {
  const auto& attrs = attributes_for(designation, mode);
  zsl::EvalReport out;
  out.split = report.split;
  out.filter = mode;
  for (const auto& [id, acc] : report.per_class) {
    if (exhibits(catalog, id, attrs)) out.per_class.emplace(id, acc);
  }
  out.empty = out.per_class.empty();
  out.recompute_mean();
  return out;
}

nlohmann::json to_json(const RarityDesignation& designation, const catalog::AttributeMatrix& attributes) {
  auto named = [&](const std::vector<std::size_t>& idx) {
    auto arr = nlohmann::json::array();
    for (auto a : idx) arr.push_back({{"index", a}, {"name", attributes.attribute_names[a]}, {"support", designation.support[a]}});
    return arr;
  };
  return {
      {"rare", named(designation.rare)},
      {"common", named(designation.common)},
      {"neither_count", designation.neither.size()},
      {"discarded", named(designation.discarded)},
  };
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::data_format, "rarity", "cannot write " + path.string());
  out << "split,A_R,A_C,Y_R,Y_C\n";
  for (const auto& r : rows) {
    out << r.split << ',' << r.rare << ',' << r.common << ',' << r.rare_classes << ',' << r.common_classes << '\n';
  }
}

}  // namespace dirac::rarity
