#include <algorithm>
#include <limits>

#include "dirac/error.hpp"
#include "dirac/hac.hpp"

namespace dirac::seedset {

double mean_silhouette(std::span<const std::size_t> labels, const Eigen::MatrixXd& distances) {
  const std::size_t n = labels.size();
  if (static_cast<std::size_t>(distances.rows()) != n || static_cast<std::size_t>(distances.cols()) != n) {
    throw Error(ErrorKind::config, "seedset", "distance matrix does not match label count");
  }
  const std::size_t n_clusters = n == 0 ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (n_clusters < 2) throw Error(ErrorKind::config, "seedset", "silhouette needs at least 2 clusters");

  std::vector<std::size_t> cluster_size(n_clusters, 0);
  for (auto l : labels) ++cluster_size[l];

  std::vector<double> sums(n_clusters);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = labels[i];
    if (cluster_size[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      sums[labels[j]] += distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double a = sums[own] / static_cast<double>(cluster_size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_clusters; ++c) {
      if (c == own || cluster_size[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(cluster_size[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

}  // namespace dirac::seedset
