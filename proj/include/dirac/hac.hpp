#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dirac::seedset {

/// One agglomeration step. Nodes 0..n-1 are leaves; merge s creates node n+s.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Full merge sequence of an agglomerative clustering, ordered by height.
class MergeTree {
public:
  MergeTree(std::size_t n_leaves, std::vector<Merge> merges);

  std::size_t leaves() const { return n_leaves_; }
  const std::vector<Merge>& merges() const { return merges_; }
  std::vector<double> heights() const;

  /// Flat assignment after applying the first leaves() - n_clusters merges.
  /// Cluster labels are numbered by the first leaf that belongs to them.
  std::vector<std::size_t> cut(std::size_t n_clusters) const;

private:
  std::size_t n_leaves_;
  std::vector<Merge> merges_;
};

/// Ward-linkage agglomerative clustering of the rows of `points` under the
/// Euclidean metric. Merge heights follow the usual convention
/// d(A, B) = sqrt(2 |A| |B| / (|A| + |B|)) * ||mean(A) - mean(B)||.
MergeTree run_hac(const Eigen::MatrixXd& points);

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);

/// Mean silhouette coefficient of a flat clustering given the full distance
/// matrix. Members of single-element clusters contribute 0.
double mean_silhouette(std::span<const std::size_t> labels, const Eigen::MatrixXd& distances);

}  // namespace dirac::seedset
