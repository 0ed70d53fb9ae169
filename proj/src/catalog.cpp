#include "dirac/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <spdlog/spdlog.h>

#include "dirac/error.hpp"
#include "text_util.hpp"

namespace dirac {

ClassSet make_class_set(std::vector<ClassId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

bool contains(const ClassSet& set, ClassId id) {
  return std::binary_search(set.begin(), set.end(), id);
}

ClassSet set_union(const ClassSet& a, const ClassSet& b) {
  ClassSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ClassSet set_intersection(const ClassSet& a, const ClassSet& b) {
  ClassSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ClassSet set_difference(const ClassSet& a, const ClassSet& b) {
  ClassSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace dirac

namespace dirac::catalog {

std::vector<std::size_t> AttributeMatrix::zero_columns() const {
  std::vector<std::size_t> out;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    if ((values.col(c).array() == 0.0).all()) out.push_back(static_cast<std::size_t>(c));
  }
  return out;
}

AttributeMatrix normalize_attributes(const AttributeMatrix& m, double scale_max) {
  if (!(scale_max > 0.0)) {
    throw Error(ErrorKind::config, "catalog", "scale_max must be positive");
  }
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      const double v = m.values(r, c);
      if (v < 0.0 || v > scale_max) {
        std::ostringstream msg;
        msg << "attribute value " << v << " at row " << r << ", column " << c
            << " outside [0, " << scale_max << "]";
        throw Error(ErrorKind::data_format, "catalog", msg.str());
      }
    }
  }
  AttributeMatrix out = m;
  if (scale_max != 1.0) out.values /= scale_max;
  return out;
}

std::vector<std::uint64_t> FeatureStore::class_counts(std::size_t num_classes) const {
  std::vector<std::uint64_t> counts(num_classes, 0);
  for (ClassId c : labels) {
    if (c < num_classes) ++counts[c];
  }
  return counts;
}

std::vector<SampleId> FeatureStore::samples_of(const ClassSet& classes) const {
  std::vector<SampleId> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (contains(classes, labels[i])) out.push_back(i);
  }
  return out;
}

ClassSet ClassCatalog::all_classes() const {
  ClassSet out(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) out[i] = static_cast<ClassId>(i);
  return out;
}

ClassSet ClassCatalog::existing_unseen() const {
  ClassSet out;
  for (const auto& c : classes) {
    if (c.existing_unseen) out.push_back(c.id);
  }
  return out;
}

ClassSet ClassCatalog::existing_seen() const {
  ClassSet out;
  for (const auto& c : classes) {
    if (!c.existing_unseen) out.push_back(c.id);
  }
  return out;
}

Eigen::MatrixXd ClassCatalog::semantics(std::span<const ClassId> ids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), attributes.values.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = attributes.values.row(ids[i]);
  }
  return out;
}

namespace {

bool parse_flag(const std::string& value, std::size_t line_no) {
  if (value == "0") return false;
  if (value == "1") return true;
  throw Error(ErrorKind::data_format, "catalog",
              "line " + std::to_string(line_no) + ": expected 0 or 1, got '" + value + "'");
}

}  // namespace

std::vector<SidecarEntry> load_catalog_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::data_format, "catalog", "cannot open " + path.string());

  std::vector<SidecarEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto kv = detail::parse_key_value(line);
    if (!kv) continue;
    auto& [key, value] = *kv;
    if (key == "class") {
      entries.push_back(SidecarEntry{value, std::nullopt, false, false});
      continue;
    }
    if (entries.empty()) {
      throw Error(ErrorKind::data_format, "catalog",
                  "line " + std::to_string(line_no) + ": '" + key + "' before any 'class' entry");
    }
    auto& e = entries.back();
    if (key == "images") {
      std::uint64_t n = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw Error(ErrorKind::data_format, "catalog",
                    "line " + std::to_string(line_no) + ": bad image count '" + value + "'");
      }
      e.image_count = n;
    } else if (key == "overlap") {
      e.overlaps_pretraining = parse_flag(value, line_no);
    } else if (key == "unseen") {
      e.existing_unseen = parse_flag(value, line_no);
    } else {
      throw Error(ErrorKind::data_format, "catalog",
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return entries;
}

void write_catalog_sidecar(const std::filesystem::path& path, const ClassCatalog& catalog) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::data_format, "catalog", "cannot write " + path.string());
  for (const auto& c : catalog.classes) {
    out << "class = " << c.name << '\n'
        << "images = " << c.image_count << '\n'
        << "overlap = " << (c.overlaps_pretraining ? 1 : 0) << '\n'
        << "unseen = " << (c.existing_unseen ? 1 : 0) << '\n';
  }
}

ClassCatalog build_catalog(AttributeMatrix attributes, const std::vector<SidecarEntry>& sidecar,
                           const FeatureStore* store) {
  const std::size_t n = attributes.num_classes();
  if (!sidecar.empty() && sidecar.size() != n) {
    throw Error(ErrorKind::data_format, "catalog",
                "sidecar lists " + std::to_string(sidecar.size()) + " classes, attribute matrix has " +
                    std::to_string(n));
  }
  if (store != nullptr && store->dim() == 0 && store->size() > 0) {
    throw Error(ErrorKind::data_format, "catalog", "feature store has zero dimension");
  }

  std::vector<std::uint64_t> counts;
  if (store != nullptr) counts = store->class_counts(n);

  ClassCatalog catalog;
  catalog.classes.resize(n);
  bool defaulted = false;
  for (std::size_t i = 0; i < n; ++i) {
    ClassInfo& info = catalog.classes[i];
    info.id = static_cast<ClassId>(i);
    info.name = attributes.class_names[i];
    if (!sidecar.empty()) {
      if (sidecar[i].name != info.name) {
        throw Error(ErrorKind::data_format, "catalog",
                    "sidecar class " + std::to_string(i) + " is '" + sidecar[i].name +
                        "' but attribute row is '" + info.name + "'");
      }
      info.overlaps_pretraining = sidecar[i].overlaps_pretraining;
      info.existing_unseen = sidecar[i].existing_unseen;
    }
    if (store != nullptr) {
      if (counts[i] == 0) {
        throw Error(ErrorKind::data_format, "catalog", "class '" + info.name + "' has no feature samples");
      }
      info.image_count = counts[i];
    } else if (!sidecar.empty() && sidecar[i].image_count) {
      info.image_count = *sidecar[i].image_count;
    } else {
      info.image_count = 1;
      defaulted = true;
    }
  }
  if (defaulted) spdlog::warn("catalog: missing image counts default to 1");

  auto zero = attributes.zero_columns();
  if (!zero.empty()) spdlog::warn("catalog: {} attribute columns are zero for every class", zero.size());

  catalog.attributes = std::move(attributes);
  return catalog;
}

}  // namespace dirac::catalog
