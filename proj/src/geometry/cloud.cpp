#include "ismp/geometry/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ismp/error.hpp"

namespace ismp {

namespace {

Aabb compute_bounds(const std::vector<Point3>& pts) {
    Aabb b{pts.front(), pts.front()};
    for (const Point3& p : pts) {
        b.min.x = std::min(b.min.x, p.x);
        b.min.y = std::min(b.min.y, p.y);
        b.min.z = std::min(b.min.z, p.z);
        b.max.x = std::max(b.max.x, p.x);
        b.max.y = std::max(b.max.y, p.y);
        b.max.z = std::max(b.max.z, p.z);
    }
    return b;
}

void validate_points(const std::vector<Point3>& pts) {
    if (pts.empty()) throw Error("geometry", "EmptyCloud", "point cloud must contain at least one point");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!pts[i].finite()) {
            throw Error("geometry", "NonFinite",
                        "non-finite coordinate at point index " + std::to_string(i));
        }
    }
}

}  // namespace

PointCloud::PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
    validate_points(points_);
    bounds_ = compute_bounds(points_);
}

PointCloud::PointCloud(std::vector<Point3> points, std::vector<Point3> normals)
    : points_(std::move(points)), normals_(std::move(normals)) {
    validate_points(points_);
    if (normals_.size() != points_.size()) {
        throw Error("geometry", "BadNormals", "normal count does not match point count");
    }
    for (std::size_t i = 0; i < normals_.size(); ++i) {
        if (!normals_[i].finite() || std::fabs(normals_[i].norm() - 1.0) > 1e-6) {
            throw Error("geometry", "BadNormals",
                        "normal at index " + std::to_string(i) + " is not unit length");
        }
    }
    bounds_ = compute_bounds(points_);
}

Point3 PointCloud::centroid() const {
    Point3 c{};
    for (const Point3& p : points_) c += p;
    return c / static_cast<double>(points_.size());
}

}  // namespace ismp
