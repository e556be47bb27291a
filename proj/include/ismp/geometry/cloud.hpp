#pragma once

#include <cstddef>
#include <vector>

#include "ismp/geometry/point3.hpp"

namespace ismp {

// Ordered point set with optional unit normals and cached bounds.
// Immutable after construction; the constructor rejects empty input,
// non-finite coordinates, and non-unit normals.
class PointCloud {
public:
    explicit PointCloud(std::vector<Point3> points);
    PointCloud(std::vector<Point3> points, std::vector<Point3> normals);

    std::size_t size() const { return points_.size(); }
    const std::vector<Point3>& points() const { return points_; }
    const Point3& operator[](std::size_t i) const { return points_[i]; }

    bool has_normals() const { return !normals_.empty(); }
    const std::vector<Point3>& normals() const { return normals_; }

    const Aabb& bounds() const { return bounds_; }
    double bbox_diagonal() const { return bounds_.diagonal(); }
    Point3 centroid() const;

private:
    std::vector<Point3> points_;
    std::vector<Point3> normals_;
    Aabb bounds_;
};

}  // namespace ismp
