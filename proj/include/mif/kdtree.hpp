#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mif/geometry.hpp"

namespace mif {

// Exact 3D kd-tree for nearest-neighbor and kNN queries. Median splits,
// deterministic construction; queries against a built tree are read-only.
class KdTree3 {
public:
    KdTree3() = default;
    explicit KdTree3(std::vector<Point3> points);

    std::size_t size() const { return points_.size(); }

    // Index and squared distance of the nearest point. Tree must be nonempty.
    std::pair<std::size_t, double> nearest(const Point3& q) const;

    double nearest_distance(const Point3& q) const;

    // k nearest neighbors, ascending by distance. If exclude_index refers to a
    // stored point it is skipped (self-queries for outlier statistics).
    std::vector<std::pair<std::size_t, double>> knn(const Point3& q, std::size_t k,
                                                    std::size_t exclude_index = SIZE_MAX) const;

    const std::vector<Point3>& points() const { return points_; }

private:
    struct Node {
        int axis = 0;
        double split = 0.0;
        std::size_t begin = 0, end = 0;  // leaf range into order_
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end, int depth);

    std::vector<Point3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace mif
