#pragma once

#include <cstddef>

#include "ismp/error.hpp"
#include "ismp/geometry/cloud.hpp"
#include "ismp/geometry/kdtree.hpp"

namespace ismp {

// Sign policy for estimated normals.
struct NormalOrientation {
    enum class Mode { TowardCentroid, TowardViewpoint };
    Mode mode = Mode::TowardCentroid;
    Point3 viewpoint;

    static NormalOrientation toward_centroid() { return {Mode::TowardCentroid, {}}; }
    static NormalOrientation toward_viewpoint(const Point3& v) { return {Mode::TowardViewpoint, v}; }
};

// PCA normals: per point, the smallest-eigenvalue eigenvector of the k-NN
// covariance, unit length, sign fixed by the orientation policy. Degenerate
// neighborhoods (all k points coincident) fall back to +z and are reported
// through the warnings list.
PointCloud estimate_normals(const PointCloud& cloud, const NeighborIndex& index, std::size_t k,
                            const NormalOrientation& orientation, Warnings* warnings = nullptr);
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k,
                            const NormalOrientation& orientation, Warnings* warnings = nullptr);

}  // namespace ismp
