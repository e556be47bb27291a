#include "ismp/geometry/normals.hpp"

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <string>

#include "ismp/parallel.hpp"

namespace ismp {

namespace {

// Deterministic sign when the orientation reference is ambiguous
// (reference direction orthogonal to the normal).
Point3 canonical_sign(const Point3& n) {
    if (n.z != 0.0) return n.z > 0.0 ? n : n * -1.0;
    if (n.y != 0.0) return n.y > 0.0 ? n : n * -1.0;
    return n.x >= 0.0 ? n : n * -1.0;
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, const NeighborIndex& index, std::size_t k,
                            const NormalOrientation& orientation, Warnings* warnings) {
    const std::size_t n = cloud.size();
    if (k < 3 || k > n) {
        throw Error("geometry", "BadCount", "estimate_normals: need N >= k >= 3, got k=" + std::to_string(k));
    }
    const Point3 centroid = cloud.centroid();
    std::vector<Point3> normals(n);
    std::atomic<std::size_t> degenerate{0};

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto nbrs = index.knn(cloud[i], k);
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (const Neighbor& nb : nbrs) {
            const Point3& p = cloud[nb.index];
            mean += Eigen::Vector3d(p.x, p.y, p.z);
        }
        mean /= static_cast<double>(nbrs.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const Neighbor& nb : nbrs) {
            const Point3& p = cloud[nb.index];
            const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - mean;
            cov += d * d.transpose();
        }
        Point3 normal{0.0, 0.0, 1.0};
        if (cov.trace() <= 1e-24) {
            degenerate.fetch_add(1);
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
            const Eigen::Vector3d v = es.eigenvectors().col(0);  // smallest eigenvalue
            normal = Point3{v.x(), v.y(), v.z()}.normalized();
        }
        const Point3 reference = orientation.mode == NormalOrientation::Mode::TowardCentroid
                                     ? centroid - cloud[i]
                                     : orientation.viewpoint - cloud[i];
        const double align = normal.dot(reference);
        const double ambiguous = 1e-9 * reference.norm();
        if (align < -ambiguous) {
            normal = normal * -1.0;
        } else if (align <= ambiguous) {
            normal = canonical_sign(normal);
        }
        normals[i] = normal;
      }
    });

    if (degenerate.load() > 0) {
        warn(warnings, "estimate_normals: " + std::to_string(degenerate.load()) +
                           " degenerate neighborhoods, normal set to +z");
    }
    return PointCloud(cloud.points(), std::move(normals));
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k,
                            const NormalOrientation& orientation, Warnings* warnings) {
    return estimate_normals(cloud, NeighborIndex(cloud), k, orientation, warnings);
}

}  // namespace ismp
