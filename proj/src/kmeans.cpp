#include "retrograph/kmeans.hpp"

#include <limits>
#include <stdexcept>

#include "retrograph/rng.hpp"

namespace retrograph {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed, int max_iter) {
  const std::size_t n = points.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("kmeans: need 1 <= k <= number of points (k=" + std::to_string(k) +
                                ", points=" + std::to_string(n) + ")");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::invalid_argument("kmeans: points differ in dimension");
  }

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<std::vector<double>> centroids;
  for (int c = 0; c < k; ++c) centroids.push_back(points[idx[static_cast<std::size_t>(c)]]);

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(points[i], centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(assign[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
  return assign;
}

std::vector<int> kmeans(const std::vector<FeatureVector>& points, int k, std::uint64_t seed, int max_iter) {
  std::vector<std::vector<double>> dense;
  dense.reserve(points.size());
  for (const auto& p : points) dense.push_back(p.dense());
  return kmeans(dense, k, seed, max_iter);
}

}  // namespace retrograph
