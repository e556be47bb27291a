#include "ismp/geometry/sampling.hpp"

#include <limits>
#include <string>

#include "ismp/error.hpp"

namespace ismp {

std::vector<std::size_t> farthest_point_sample(const std::vector<Point3>& points, std::size_t m,
                                               std::size_t seed_index) {
    const std::size_t n = points.size();
    if (m < 1 || m > n) {
        throw Error("geometry", "BadCount",
                    "farthest_point_sample: m=" + std::to_string(m) + " outside [1, " +
                        std::to_string(n) + "]");
    }
    if (seed_index >= n) throw Error("geometry", "BadCount", "farthest_point_sample: seed index out of range");

    std::vector<std::size_t> selected;
    selected.reserve(m);
    selected.push_back(seed_index);

    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t step = 1; step < m; ++step) {
        const Point3& last = points[selected.back()];
        std::size_t best = n;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = squared_distance(points[i], last);
            if (d2 < min_d2[i]) min_d2[i] = d2;
            // min_d2 is 0 for already-selected points, so they never win.
            if (min_d2[i] > best_d2 && min_d2[i] > 0.0) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        if (best == n) {
            // All remaining candidates coincide with selected ones; fall back
            // to the lowest unselected index to keep the m-distinct contract.
            std::vector<char> taken(n, 0);
            for (std::size_t s : selected) taken[s] = 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i]) {
                    best = i;
                    break;
                }
            }
        }
        selected.push_back(best);
        min_d2[best] = 0.0;
    }
    return selected;
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t m,
                                               std::size_t seed_index) {
    return farthest_point_sample(cloud.points(), m, seed_index);
}

}  // namespace ismp
