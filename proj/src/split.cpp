#include <algorithm>
#include <random>

#include "dirac/catalog.hpp"
#include "dirac/error.hpp"

namespace dirac::catalog {

std::pair<ClassSet, ClassSet> split_unseen(const ClassSet& unseen_existing, std::uint64_t rng_seed) {
  if (unseen_existing.size() < 2) {
    throw Error(ErrorKind::config, "catalog", "cannot split an unseen set of " +
                                                 std::to_string(unseen_existing.size()) + " classes");
  }
  std::vector<ClassId> order = unseen_existing;
  std::mt19937_64 rng(rng_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto half = static_cast<std::ptrdiff_t>(order.size() / 2);
  ClassSet common = make_class_set({order.begin(), order.begin() + half});
  ClassSet rest = make_class_set({order.begin() + half, order.end()});
  return {std::move(common), std::move(rest)};
}

SplitDefinition make_split(const ClassCatalog& catalog, std::uint64_t rng_seed) {
  SplitDefinition split;
  split.seen_existing = catalog.existing_seen();
  split.unseen_existing = catalog.existing_unseen();
  auto [common, rest] = split_unseen(split.unseen_existing, rng_seed);
  split.common_unseen = std::move(common);
  split.remaining_unseen = std::move(rest);
  split.rng_seed = rng_seed;
  return split;
}

void SplitDefinition::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::protocol, "catalog", what); };
  if (!set_intersection(seen_existing, unseen_existing).empty()) fail("S_E and U_E overlap");
  if (!set_intersection(common_unseen, remaining_unseen).empty()) fail("U_com and remaining unseen overlap");
  if (set_union(common_unseen, remaining_unseen) != unseen_existing) fail("U_com and remaining unseen do not cover U_E");
  if (!set_intersection(seen_proposed, common_unseen).empty()) fail("S_P intersects U_com");
  if (!set_difference(seen_proposed, object_domain()).empty()) fail("S_P leaves the object domain");
}

namespace {

nlohmann::json named(const ClassSet& ids, const ClassCatalog& catalog) {
  auto arr = nlohmann::json::array();
  for (ClassId id : ids) arr.push_back({{"id", id}, {"name", catalog.at(id).name}});
  return arr;
}

ClassSet ids_from(const nlohmann::json& arr) {
  std::vector<ClassId> ids;
  for (const auto& e : arr) ids.push_back(e.is_object() ? e.at("id").get<ClassId>() : e.get<ClassId>());
  return make_class_set(std::move(ids));
}

}  // namespace

nlohmann::json to_json(const SplitDefinition& split, const ClassCatalog& catalog) {
  return {
      {"rng_seed", split.rng_seed},
      {"seen_existing", named(split.seen_existing, catalog)},
      {"unseen_existing", named(split.unseen_existing, catalog)},
      {"common_unseen", named(split.common_unseen, catalog)},
      {"remaining_unseen", named(split.remaining_unseen, catalog)},
      {"seen_proposed", named(split.seen_proposed, catalog)},
  };
}

SplitDefinition split_from_json(const nlohmann::json& j) {
  try {
    SplitDefinition s;
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.seen_existing = ids_from(j.at("seen_existing"));
    s.unseen_existing = ids_from(j.at("unseen_existing"));
    s.common_unseen = ids_from(j.at("common_unseen"));
    s.remaining_unseen = ids_from(j.at("remaining_unseen"));
    if (j.contains("seen_proposed")) s.seen_proposed = ids_from(j.at("seen_proposed"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data_format, "catalog", std::string("split json: ") + e.what());
  }
}

}  // namespace dirac::catalog
