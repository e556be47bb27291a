#pragma once

#include <cstddef>
#include <vector>

#include "ismp/error.hpp"
#include "ismp/geometry/cloud.hpp"
#include "ismp/geometry/kdtree.hpp"

namespace ismp {

struct PatchConfig {
    std::size_t center_count = 512;  // farthest-point-sampled patch centers
    std::size_t k_max = 32;          // neighbour cap per patch
    double radius_fraction = 0.05;   // patch radius as fraction of bbox diagonal
    std::size_t fps_seed_index = 0;
};

// A local neighbourhood anchored at one sampled center.  member_indices always
// contains the center itself and is sorted ascending.
struct Patch {
    std::size_t center_index = 0;
    std::vector<std::size_t> member_indices;
    double radius = 0.0;
    std::size_t k_cap = 0;
};

struct PatchSet {
    std::vector<std::size_t> center_indices;  // into the source cloud
    std::vector<Patch> patches;
};

// Centers via farthest-point sampling, members via radius search truncated to
// the k_max nearest.  center_count is clamped to the cloud size.  The second
// overload reuses a prebuilt spatial index over the same cloud.
PatchSet build_patches(const PointCloud& cloud, const PatchConfig& config,
                       Warnings* warnings = nullptr);
PatchSet build_patches(const PointCloud& cloud, const NeighborIndex& index,
                       const PatchConfig& config, Warnings* warnings = nullptr);

}  // namespace ismp
