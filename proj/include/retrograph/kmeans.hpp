#pragma once

#include <cstdint>
#include <vector>

#include "retrograph/molspace.hpp"

namespace retrograph {

/// Lloyd's algorithm on dense rows. Centroids start at k distinct seeded
/// random points; stops at an assignment fixpoint or after `max_iter`
/// rounds. Ties go to the lowest cluster index. Throws std::invalid_argument
/// unless 1 <= k <= points.size().
std::vector<int> kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                        int max_iter = 100);

/// Same on binary fingerprints relaxed to {0, 1} reals.
std::vector<int> kmeans(const std::vector<FeatureVector>& points, int k, std::uint64_t seed, int max_iter = 100);

}  // namespace retrograph
