#include "ismp/geometry/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace ismp {

namespace {

constexpr std::size_t kLeafSize = 16;

inline double axis_value(const Point3& p, int axis) {
    return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
}

inline double box_sqdist(const Point3& q, const Point3& lo, const Point3& hi) {
    auto clamp_d = [](double v, double a, double b) {
        const double c = v < a ? a - v : (v > b ? v - b : 0.0);
        return c * c;
    };
    return clamp_d(q.x, lo.x, hi.x) + clamp_d(q.y, lo.y, hi.y) + clamp_d(q.z, lo.z, hi.z);
}

// Lexicographic (distance, index) ordering; lower index wins ties everywhere.
inline bool closer(const Neighbor& a, const Neighbor& b) {
    return a.sqdist < b.sqdist || (a.sqdist == b.sqdist && a.index < b.index);
}

}  // namespace

NeighborIndex::NeighborIndex(const PointCloud& cloud) : NeighborIndex(cloud.points()) {}

NeighborIndex::NeighborIndex(std::vector<Point3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(points_.size() / kLeafSize * 2 + 2);
    if (!points_.empty()) root_ = build(0, points_.size());
}

std::size_t NeighborIndex::build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({});
    Node node;
    node.begin = begin;
    node.end = end;
    node.box_min = node.box_max = points_[order_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i) {
        const Point3& p = points_[order_[i]];
        node.box_min.x = std::min(node.box_min.x, p.x);
        node.box_min.y = std::min(node.box_min.y, p.y);
        node.box_min.z = std::min(node.box_min.z, p.z);
        node.box_max.x = std::max(node.box_max.x, p.x);
        node.box_max.y = std::max(node.box_max.y, p.y);
        node.box_max.z = std::max(node.box_max.z, p.z);
    }
    const Point3 ext = node.box_max - node.box_min;
    if (end - begin <= kLeafSize || (ext.x == 0.0 && ext.y == 0.0 && ext.z == 0.0)) {
        nodes_[id] = node;
        return id;
    }
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > axis_value(ext, axis)) axis = 2;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         const double va = axis_value(points_[a], axis);
                         const double vb = axis_value(points_[b], axis);
                         return va < vb || (va == vb && a < b);
                     });
    node.axis = axis;
    node.split = axis_value(points_[order_[mid]], axis);
    node.left = build(begin, mid);
    node.right = build(mid, end);
    nodes_[id] = node;
    return id;
}

void NeighborIndex::knn_search(std::size_t ni, const Point3& q, std::size_t k,
                               std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[ni];
    if (heap.size() == k && !heap.empty()) {
        const double bd = box_sqdist(q, node.box_min, node.box_max);
        if (bd > heap.front().sqdist) return;
    }
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            const Neighbor cand{idx, squared_distance(q, points_[idx])};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), closer);
            } else if (closer(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), closer);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), closer);
            }
        }
        return;
    }
    const bool left_first = axis_value(q, node.axis) < node.split;
    knn_search(left_first ? node.left : node.right, q, k, heap);
    knn_search(left_first ? node.right : node.left, q, k, heap);
}

std::vector<Neighbor> NeighborIndex::knn(const Point3& query, std::size_t k) const {
    std::vector<Neighbor> heap;
    if (k == 0 || points_.empty()) return heap;
    k = std::min(k, points_.size());
    heap.reserve(k + 1);
    knn_search(root_, query, k, heap);
    std::sort(heap.begin(), heap.end(), closer);
    return heap;
}

Neighbor NeighborIndex::nearest(const Point3& query) const { return knn(query, 1).front(); }

void NeighborIndex::radius_search(std::size_t ni, const Point3& q, double r2,
                                  std::vector<Neighbor>& out) const {
    const Node& node = nodes_[ni];
    if (box_sqdist(q, node.box_min, node.box_max) > r2) return;
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            const double d2 = squared_distance(q, points_[idx]);
            if (d2 <= r2) out.push_back({idx, d2});
        }
        return;
    }
    radius_search(node.left, q, r2, out);
    radius_search(node.right, q, r2, out);
}

std::vector<Neighbor> NeighborIndex::radius(const Point3& query, double r) const {
    std::vector<Neighbor> out;
    if (points_.empty() || r < 0.0) return out;
    radius_search(root_, query, r * r, out);
    std::sort(out.begin(), out.end(), closer);
    return out;
}

}  // namespace ismp
