#pragma once

#include <cstddef>
#include <vector>

#include "ismp/geometry/cloud.hpp"

namespace ismp {

// Greedy maximin selection: the first pick is seed_index, every later pick
// maximizes the minimum distance to the already-selected set. Ties go to the
// lower index, so the sequence is fully deterministic.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t m,
                                               std::size_t seed_index = 0);

// Same selection over arbitrary points (used for the coordinate bank).
std::vector<std::size_t> farthest_point_sample(const std::vector<Point3>& points, std::size_t m,
                                               std::size_t seed_index = 0);

}  // namespace ismp
