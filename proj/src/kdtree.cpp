#include "mif/kdtree.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace mif {

namespace {
constexpr std::size_t kLeafSize = 16;

double sq(double v) { return v * v; }

double squared_dist(const Point3& a, const Point3& b) {
    return sq(a.x - b.x) + sq(a.y - b.y) + sq(a.z - b.z);
}
}  // namespace

KdTree3::KdTree3(std::vector<Point3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!points_.empty()) root_ = build(0, points_.size(), 0);
}

int KdTree3::build(std::size_t begin, std::size_t end, int depth) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_.push_back(node);
        return int(nodes_.size()) - 1;
    }

    // Split along the widest axis of the subset bounds.
    Aabb box;
    for (std::size_t i = begin; i < end; ++i) box.expand(points_[order_[i]]);
    Vec3 ext = box.extent();
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;

    std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         if (points_[a][axis] != points_[b][axis])
                             return points_[a][axis] < points_[b][axis];
                         return a < b;  // deterministic tie order
                     });

    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    int self = int(nodes_.size());
    nodes_.push_back(node);
    int left = build(begin, mid, depth + 1);
    int right = build(mid, end, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

std::pair<std::size_t, double> KdTree3::nearest(const Point3& q) const {
    if (points_.empty()) throw std::runtime_error("empty-target: kd-tree has no points");
    std::size_t best = SIZE_MAX;
    double best_d2 = std::numeric_limits<double>::max();

    // Explicit stack; nodes pruned by slab distance.
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        int ni = stack.back();
        stack.pop_back();
        const Node& n = nodes_[std::size_t(ni)];
        if (n.left < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                double d2 = squared_dist(q, points_[order_[i]]);
                if (d2 < best_d2 || (d2 == best_d2 && order_[i] < best)) {
                    best_d2 = d2;
                    best = order_[i];
                }
            }
            continue;
        }
        double delta = q[n.axis] - n.split;
        int near = delta <= 0 ? n.left : n.right;
        int far = delta <= 0 ? n.right : n.left;
        if (sq(delta) <= best_d2) stack.push_back(far);
        stack.push_back(near);
    }
    return {best, best_d2};
}

double KdTree3::nearest_distance(const Point3& q) const { return std::sqrt(nearest(q).second); }

std::vector<std::pair<std::size_t, double>> KdTree3::knn(const Point3& q, std::size_t k,
                                                         std::size_t exclude_index) const {
    std::vector<std::pair<std::size_t, double>> result;
    if (points_.empty() || k == 0) return result;

    // Max-heap on squared distance holds the current k best.
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry> heap;

    std::vector<int> stack{root_};
    while (!stack.empty()) {
        int ni = stack.back();
        stack.pop_back();
        const Node& n = nodes_[std::size_t(ni)];
        if (n.left < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                std::size_t idx = order_[i];
                if (idx == exclude_index) continue;
                double d2 = squared_dist(q, points_[idx]);
                if (heap.size() < k) {
                    heap.emplace(d2, idx);
                } else if (d2 < heap.top().first) {
                    heap.pop();
                    heap.emplace(d2, idx);
                }
            }
            continue;
        }
        double delta = q[n.axis] - n.split;
        int near = delta <= 0 ? n.left : n.right;
        int far = delta <= 0 ? n.right : n.left;
        if (heap.size() < k || sq(delta) <= heap.top().first) stack.push_back(far);
        stack.push_back(near);
    }

    result.resize(heap.size());
    for (std::size_t i = result.size(); i-- > 0;) {
        result[i] = {heap.top().second, heap.top().first};
        heap.pop();
    }
    return result;
}

}  // namespace mif
