#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ismp/error.hpp"
#include "ismp/features/matrix.hpp"
#include "ismp/geometry/cloud.hpp"
#include "ismp/geometry/point3.hpp"

namespace ismp {

// Proper rigid motion p -> R p + t with det(R) = +1.
struct RigidTransform {
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    Point3 translation{0, 0, 0};

    static RigidTransform identity() { return {}; }

    Point3 rotate(const Point3& p) const {
        return {rotation[0] * p.x + rotation[1] * p.y + rotation[2] * p.z,
                rotation[3] * p.x + rotation[4] * p.y + rotation[5] * p.z,
                rotation[6] * p.x + rotation[7] * p.y + rotation[8] * p.z};
    }
    Point3 apply(const Point3& p) const { return rotate(p) + translation; }

    // this ∘ other: apply `other` first, then this one.
    RigidTransform compose(const RigidTransform& other) const;

    // Max abs deviation of R^T R from the identity; 0 for an exact rotation.
    double orthonormality_error() const;
};

// Least-squares rigid fit mapping src[i] onto dst[i] (Kabsch/Umeyama without
// scale).  Needs at least 3 non-degenerate pairs.
RigidTransform fit_rigid(const std::vector<Point3>& src, const std::vector<Point3>& dst);

struct RansacConfig {
    int iterations = 4096;
    // Inlier threshold as a fraction of the destination bounding-box diagonal.
    double inlier_fraction_of_diagonal = 0.01;
    int sample_size = 3;
    double min_inlier_fraction = 0.25;
    std::uint64_t seed = 7;
};

struct RegistrationResult {
    RigidTransform transform;
    double inlier_fraction = 0.0;
    double rms_error = 0.0;
    std::size_t correspondences = 0;
};

// Aligns src onto dst using mutual nearest-neighbour matches in feature space
// followed by RANSAC over 3-point hypotheses.  The point lists carry the
// locations the feature rows describe (src_points.size() == src_features.rows).
RegistrationResult register_clouds(const std::vector<Point3>& src_points,
                                   const FeatureMatrix& src_features,
                                   const std::vector<Point3>& dst_points,
                                   const FeatureMatrix& dst_features,
                                   const RansacConfig& config = {},
                                   Warnings* warnings = nullptr);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& t);

}  // namespace ismp
