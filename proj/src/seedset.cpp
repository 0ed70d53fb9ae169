#include "dirac/seedset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dirac/error.hpp"

namespace dirac::seedset {

std::vector<std::vector<std::size_t>> ClusterPartition::members() const {
  std::vector<std::vector<std::size_t>> out(n_clusters);
  for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
  return out;
}

ClusterPartition make_partition(std::vector<std::size_t> assignment) {
  ClusterPartition p;
  p.n_clusters = assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
  p.assignment = std::move(assignment);
  std::vector<std::size_t> count(p.n_clusters, 0);
  for (auto a : p.assignment) ++count[a];
  for (std::size_t i = 0; i < p.assignment.size(); ++i) {
    if (count[p.assignment[i]] == 1) p.singletons.push_back(i);
  }
  return p;
}

ClusterPartition optimal_cluster_count(const Eigen::MatrixXd& semantics, std::size_t lower_bound) {
  const auto n = static_cast<std::size_t>(semantics.rows());
  if (lower_bound < 2) throw Error(ErrorKind::config, "seedset", "cluster lower bound must be at least 2");
  if (n < lower_bound + 1) {
    throw Error(ErrorKind::config, "seedset", "object domain of " + std::to_string(n) +
                                                 " classes is too small for lower bound " +
                                                 std::to_string(lower_bound));
  }
  const MergeTree tree = run_hac(semantics);
  const Eigen::MatrixXd dist = pairwise_distances(semantics);

  std::vector<std::pair<std::size_t, double>> sweep;
  std::size_t best_i = 0;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_labels;
  for (std::size_t i = std::max<std::size_t>(2, lower_bound); i <= n - 1; ++i) {
    auto labels = tree.cut(i);
    const double msc = mean_silhouette(labels, dist);
    sweep.emplace_back(i, msc);
    if (msc > best) {
      best = msc;
      best_i = i;
      best_labels = std::move(labels);
    }
  }
  ClusterPartition p = make_partition(std::move(best_labels));
  if (p.n_clusters != best_i) throw Error(ErrorKind::numerical, "seedset", "tree cut produced wrong cluster count");
  p.silhouette = best;
  p.sweep = std::move(sweep);
  return p;
}

ClusterAttributeView binarize_attributes(const Eigen::MatrixXd& cluster_semantics) {
  const Eigen::Index rows = cluster_semantics.rows();
  ClusterAttributeView view;
  std::vector<Eigen::VectorXd> kept_binary;
  for (Eigen::Index l = 0; l < cluster_semantics.cols(); ++l) {
    const auto col = cluster_semantics.col(l);
    const auto nonzero = (col.array() != 0.0).count();
    if (nonzero == 0) {
      view.irrelevant.push_back(static_cast<std::size_t>(l));
      continue;
    }
    // Rounding can push the mean of equal entries just below their value.
    const double smallest = (col.array() != 0.0).select(col, std::numeric_limits<double>::infinity()).minCoeff();
    const double threshold = std::clamp(col.sum() / static_cast<double>(nonzero), smallest, col.maxCoeff());
    Eigen::VectorXd b = (col.array() > threshold).cast<double>();
    if (b.sum() == 0.0) {
      view.unremarkable.push_back(static_cast<std::size_t>(l));
      continue;
    }
    view.retained.push_back(static_cast<std::size_t>(l));
    kept_binary.push_back(std::move(b));
  }
  const auto kept = static_cast<Eigen::Index>(view.retained.size());
  view.binary.resize(rows, kept);
  view.retained_semantics.resize(rows, kept);
  for (Eigen::Index j = 0; j < kept; ++j) {
    view.binary.col(j) = kept_binary[static_cast<std::size_t>(j)];
    view.retained_semantics.col(j) = cluster_semantics.col(static_cast<Eigen::Index>(view.retained[j]));
  }
  return view;
}

ClusterAttributeView filter_cluster_attributes(const Eigen::MatrixXd& cluster_semantics) {
  if (cluster_semantics.rows() < 1) throw Error(ErrorKind::config, "seedset", "empty cluster");
  ClusterAttributeView view = binarize_attributes(cluster_semantics);
  if (view.retained.empty()) {
    throw Error(ErrorKind::numerical, "seedset", "degenerate cluster: every attribute is irrelevant or unremarkable");
  }
  return view;
}

AttributeWeights rarity_weights(const ClusterAttributeView& view) {
  const double members = static_cast<double>(view.binary.rows());
  // Column supports are the diagonal of B^T B.
  const Eigen::VectorXd support = view.binary.colwise().squaredNorm().transpose();
  AttributeWeights w;
  for (Eigen::Index l = 0; l < support.size(); ++l) {
    const double theta = support(l) / members;
    w.theta.push_back(theta);
    w.weight.push_back(-std::log(theta));
  }
  return w;
}

bool SeedSet::has(ClassId id) const {
  return std::find(members.begin(), members.end(), id) != members.end();
}

void SeedSet::add(ClassId id, Provenance p) {
  if (has(id)) throw Error(ErrorKind::numerical, "seedset", "class " + std::to_string(id) + " already in seed set");
  members.push_back(id);
  provenance.push_back(p);
}

namespace {

// Member row closest to the cluster centroid; first row wins ties.
std::size_t nearest_to_centroid(const Eigen::MatrixXd& rows) {
  const Eigen::RowVectorXd centroid = rows.colwise().mean();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double d = (rows.row(r) - centroid).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(r);
    }
  }
  return best;
}

}  // namespace

SeedSet select_representatives(std::span<const ClassId> domain, const Eigen::MatrixXd& domain_semantics,
                               const ClusterPartition& partition) {
  if (partition.assignment.size() != domain.size() ||
      static_cast<std::size_t>(domain_semantics.rows()) != domain.size()) {
    throw Error(ErrorKind::config, "seedset", "partition does not cover the domain");
  }
  SeedSet seeds;
  const auto clusters = partition.members();
  for (std::size_t j = 0; j < clusters.size(); ++j) {
    const auto& rows = clusters[j];
    if (rows.empty()) throw Error(ErrorKind::config, "seedset", "empty cluster " + std::to_string(j));
    if (rows.size() == 1) {
      seeds.add(domain[rows[0]], {ProvenanceKind::outlier, j, false});
      continue;
    }
    Eigen::MatrixXd sem(static_cast<Eigen::Index>(rows.size()), domain_semantics.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sem.row(static_cast<Eigen::Index>(r)) = domain_semantics.row(rows[r]);

    const ClusterAttributeView view = binarize_attributes(sem);
    if (view.retained.empty()) {
      seeds.add(domain[rows[nearest_to_centroid(sem)]], {ProvenanceKind::cluster_representative, j, true});
      continue;
    }
    const AttributeWeights w = rarity_weights(view);
    const Eigen::Map<const Eigen::VectorXd> weight(w.weight.data(), static_cast<Eigen::Index>(w.weight.size()));
    const Eigen::VectorXd score = view.binary.cwiseProduct(view.retained_semantics) * weight;
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < score.size(); ++r) {
      if (score(r) > score(best)) best = r;
    }
    seeds.add(domain[rows[static_cast<std::size_t>(best)]], {ProvenanceKind::cluster_representative, j, false});
  }
  return seeds;
}

Stage1Result build_seed_set(const catalog::ClassCatalog& catalog, const ClassSet& domain,
                            std::size_t lower_bound) {
  const Eigen::MatrixXd sem = catalog.semantics(domain);
  Stage1Result out;
  out.partition = optimal_cluster_count(sem, lower_bound);
  out.seeds = select_representatives(domain, sem, out.partition);
  return out;
}

const char* to_string(ProvenanceKind kind) {
  switch (kind) {
    case ProvenanceKind::cluster_representative:
      return "cluster_representative";
    case ProvenanceKind::outlier:
      return "outlier";
    case ProvenanceKind::vsm_iteration:
      return "vsm_iteration";
  }
  return "unknown";
}

nlohmann::json to_json(const SeedSet& seeds, const catalog::ClassCatalog& catalog) {
  auto members = nlohmann::json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& p = seeds.provenance[i];
    nlohmann::json prov = {{"kind", to_string(p.kind)}, {"index", p.index}};
    if (p.centroid_fallback) prov["centroid_fallback"] = true;
    members.push_back({{"id", seeds.members[i]}, {"name", catalog.at(seeds.members[i]).name}, {"provenance", prov}});
  }
  return members;
}

nlohmann::json to_json(const Stage1Result& result, const ClassSet& domain, const catalog::ClassCatalog& catalog) {
  auto clusters = nlohmann::json::array();
  for (const auto& rows : result.partition.members()) {
    auto ids = nlohmann::json::array();
    for (auto r : rows) ids.push_back(domain[r]);
    clusters.push_back(ids);
  }
  auto sweep = nlohmann::json::array();
  for (const auto& [i, msc] : result.partition.sweep) sweep.push_back({{"clusters", i}, {"silhouette", msc}});
  return {
      {"n_z", result.partition.n_clusters},
      {"silhouette", result.partition.silhouette},
      {"seeds", to_json(result.seeds, catalog)},
      {"clusters", clusters},
      {"sweep", sweep},
  };
}

SeedSet seed_set_from_json(const nlohmann::json& j) {
  try {
    const auto& arr = j.is_array() ? j : j.at("seeds");
    SeedSet seeds;
    for (const auto& m : arr) {
      Provenance p;
      const auto kind = m.at("provenance").at("kind").get<std::string>();
      if (kind == "cluster_representative") {
        p.kind = ProvenanceKind::cluster_representative;
      } else if (kind == "outlier") {
        p.kind = ProvenanceKind::outlier;
      } else if (kind == "vsm_iteration") {
        p.kind = ProvenanceKind::vsm_iteration;
      } else {
        throw Error(ErrorKind::data_format, "seedset", "unknown provenance '" + kind + "'");
      }
      p.index = m.at("provenance").at("index").get<std::size_t>();
      p.centroid_fallback = m.at("provenance").value("centroid_fallback", false);
      seeds.add(m.at("id").get<ClassId>(), p);
    }
    return seeds;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data_format, "seedset", std::string("seed set json: ") + e.what());
  }
}

}  // namespace dirac::seedset
