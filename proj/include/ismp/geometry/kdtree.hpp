#pragma once

#include <cstddef>
#include <vector>

#include "ismp/geometry/cloud.hpp"

namespace ismp {

struct Neighbor {
    std::size_t index;
    double sqdist;
};

// kd-tree over a cloud's points. Results are sorted ascending by distance
// with ties broken by lower index, matching exhaustive search exactly.
// Read queries are safe from multiple threads.
class NeighborIndex {
public:
    explicit NeighborIndex(const PointCloud& cloud);
    explicit NeighborIndex(std::vector<Point3> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Point3>& points() const { return points_; }

    std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;
    std::vector<Neighbor> radius(const Point3& query, double r) const;
    Neighbor nearest(const Point3& query) const;

private:
    struct Node {
        std::size_t begin, end;    // range into order_
        int axis = -1;             // -1 for leaf
        double split = 0.0;
        std::size_t left = 0, right = 0;
        Point3 box_min, box_max;
    };

    std::size_t build(std::size_t begin, std::size_t end);
    void knn_search(std::size_t node, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const;
    void radius_search(std::size_t node, const Point3& q, double r2, std::vector<Neighbor>& out) const;

    std::vector<Point3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    std::size_t root_ = 0;
};

}  // namespace ismp
