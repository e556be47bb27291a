#include "ismp/descriptors/patches.hpp"

#include <algorithm>
#include <atomic>

#include "ismp/geometry/sampling.hpp"
#include "ismp/parallel.hpp"

namespace ismp {

PatchSet build_patches(const PointCloud& cloud, const PatchConfig& config, Warnings* warnings) {
    return build_patches(cloud, NeighborIndex(cloud), config, warnings);
}

PatchSet build_patches(const PointCloud& cloud, const NeighborIndex& index,
                       const PatchConfig& config, Warnings* warnings) {
    if (config.k_max == 0)
        throw Error("descriptors", "BadCount", "k_max must be positive");
    if (config.radius_fraction <= 0.0)
        throw Error("descriptors", "BadCount", "radius_fraction must be positive");
    const std::size_t m = std::min(config.center_count, cloud.size());
    if (m == 0) throw Error("descriptors", "BadCount", "center_count must be positive");
    if (m < config.center_count)
        warn(warnings, "descriptors: center_count clamped to cloud size " + std::to_string(m));

    const double radius = cloud.bounds().diagonal() * config.radius_fraction;

    PatchSet set;
    set.center_indices = farthest_point_sample(cloud, m, config.fps_seed_index);
    set.patches.resize(m);

    std::atomic<std::size_t> truncated{0};
    parallel_for(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t ci = set.center_indices[i];
            // radius_neighbors returns (distance, index)-sorted hits, so the
            // k_max cut keeps the nearest ones.
            std::vector<Neighbor> hits = index.radius(cloud[ci], radius);
            if (hits.size() > config.k_max) {
                hits.resize(config.k_max);
                truncated.fetch_add(1, std::memory_order_relaxed);
            }
            Patch& patch = set.patches[i];
            patch.center_index = ci;
            patch.radius = radius;
            patch.k_cap = config.k_max;
            patch.member_indices.reserve(hits.size());
            bool has_center = false;
            for (const Neighbor& h : hits) {
                patch.member_indices.push_back(h.index);
                has_center = has_center || h.index == ci;
            }
            // The cap can push the center out when many coincident points sort
            // ahead of it; the center must always belong to its own patch.
            if (!has_center) {
                if (patch.member_indices.empty())
                    patch.member_indices.push_back(ci);
                else
                    patch.member_indices.back() = ci;
            }
            std::sort(patch.member_indices.begin(), patch.member_indices.end());
        }
    });
    if (std::size_t n = truncated.load(); n > 0)
        warn(warnings, "descriptors: " + std::to_string(n) + " patches truncated to k_max=" +
                           std::to_string(config.k_max));
    return set;
}

}  // namespace ismp
