#pragma once

#include <cstddef>
#include <vector>

#include "ismp/error.hpp"
#include "ismp/features/matrix.hpp"
#include "ismp/geometry/cloud.hpp"
#include "ismp/geometry/kdtree.hpp"

namespace ismp {

struct FpfhConfig {
    std::size_t bins_per_feature = 11;
    std::size_t k_spfh = 16;
};

// Fast point feature histograms at the given query points.  The cloud must
// carry unit normals.  Each descriptor is three bins_per_feature-bin
// histograms (alpha, phi, theta) back to back; every sub-histogram is
// normalised to sum 100.  Coincident neighbour pairs are skipped and counted
// into warnings.
FeatureMatrix fpfh(const PointCloud& cloud, const std::vector<std::size_t>& query_indices,
                   const FpfhConfig& config = {}, Warnings* warnings = nullptr);
FeatureMatrix fpfh(const PointCloud& cloud, const NeighborIndex& index,
                   const std::vector<std::size_t>& query_indices, const FpfhConfig& config = {},
                   Warnings* warnings = nullptr);

}  // namespace ismp
