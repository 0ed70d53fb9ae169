#include "dirac/hac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dirac/error.hpp"
#include "union_find.hpp"

namespace dirac::seedset {

MergeTree::MergeTree(std::size_t n_leaves, std::vector<Merge> merges)
    : n_leaves_(n_leaves), merges_(std::move(merges)) {}

std::vector<double> MergeTree::heights() const {
  std::vector<double> h;
  h.reserve(merges_.size());
  for (const auto& m : merges_) h.push_back(m.height);
  return h;
}

std::vector<std::size_t> MergeTree::cut(std::size_t n_clusters) const {
  if (n_clusters < 1 || n_clusters > n_leaves_) {
    throw Error(ErrorKind::config, "seedset", "cannot cut " + std::to_string(n_leaves_) + " leaves into " +
                                                 std::to_string(n_clusters) + " clusters");
  }
  // Node ids above n map to the leaf that represents them in the union-find.
  std::vector<std::size_t> leaf_of(n_leaves_ + merges_.size());
  std::iota(leaf_of.begin(), leaf_of.begin() + static_cast<std::ptrdiff_t>(n_leaves_), 0);
  detail::UnionFind uf(n_leaves_);
  const std::size_t steps = n_leaves_ - n_clusters;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto& m = merges_[s];
    leaf_of[n_leaves_ + s] = uf.unite(leaf_of[m.left], leaf_of[m.right]);
  }
  std::vector<std::size_t> labels(n_leaves_);
  std::vector<std::size_t> label_of_root(n_leaves_, std::numeric_limits<std::size_t>::max());
  std::size_t next = 0;
  for (std::size_t i = 0; i < n_leaves_; ++i) {
    auto& l = label_of_root[uf.find(i)];
    if (l == std::numeric_limits<std::size_t>::max()) l = next++;
    labels[i] = l;
  }
  return labels;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
    }
  }
  return d;
}

// Nearest-neighbour chain. Ward linkage is reducible, so the chain yields the
// same set of merges as the greedy global-minimum algorithm; they are then
// sorted by height and renumbered through a union-find pass.
MergeTree run_hac(const Eigen::MatrixXd& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw Error(ErrorKind::config, "seedset", "clustering needs at least 2 classes");

  // Squared Ward dissimilarities; slot i holds whichever cluster currently lives there.
  Eigen::MatrixXd dist = pairwise_distances(points).array().square();
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);

  struct RawMerge {
    std::size_t a, b;  // representative leaves (slot indices)
    double height;
  };
  std::vector<RawMerge> raw;
  raw.reserve(n - 1);

  std::vector<std::size_t> chain;
  chain.reserve(n);
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      chain.push_back(static_cast<std::size_t>(std::find(active.begin(), active.end(), true) - active.begin()));
    }
    const std::size_t a = chain.back();
    // Prefer the chain predecessor on ties so the chain cannot cycle.
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_d = std::numeric_limits<double>::infinity();
    if (chain.size() >= 2) {
      best = chain[chain.size() - 2];
      best_d = dist(a, best);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      if (dist(a, j) < best_d) {
        best_d = dist(a, j);
        best = j;
      }
    }

    if (chain.size() >= 2 && best == chain[chain.size() - 2]) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t keep = std::min(a, best);
      const std::size_t drop = std::max(a, best);
      raw.push_back({keep, drop, std::sqrt(std::max(best_d, 0.0))});

      const double ni = static_cast<double>(size[keep]);
      const double nj = static_cast<double>(size[drop]);
      for (std::size_t k = 0; k < n; ++k) {
        if (!active[k] || k == keep || k == drop) continue;
        const double nk = static_cast<double>(size[k]);
        const double updated =
            ((ni + nk) * dist(keep, k) + (nj + nk) * dist(drop, k) - nk * best_d) / (ni + nj + nk);
        dist(keep, k) = dist(k, keep) = updated;
      }
      size[keep] += size[drop];
      active[drop] = false;
      --remaining;
    } else {
      chain.push_back(best);
    }
  }

  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawMerge& x, const RawMerge& y) { return x.height < y.height; });

  std::vector<Merge> merges;
  merges.reserve(raw.size());
  detail::UnionFind uf(n);
  std::vector<std::size_t> node_of_root(n);
  std::iota(node_of_root.begin(), node_of_root.end(), 0);
  std::vector<std::size_t> size_of_root(n, 1);
  for (std::size_t s = 0; s < raw.size(); ++s) {
    const std::size_t ra = uf.find(raw[s].a);
    const std::size_t rb = uf.find(raw[s].b);
    std::size_t left = node_of_root[ra];
    std::size_t right = node_of_root[rb];
    if (left > right) std::swap(left, right);
    const std::size_t merged_size = size_of_root[ra] + size_of_root[rb];
    merges.push_back({left, right, raw[s].height, merged_size});
    const std::size_t root = uf.unite(ra, rb);
    node_of_root[root] = n + s;
    size_of_root[root] = merged_size;
  }
  return MergeTree(n, std::move(merges));
}

}  // namespace dirac::seedset
