#ifndef HMTOL_CLUSTER_TREE_HPP
#define HMTOL_CLUSTER_TREE_HPP
//
// Geometric cluster tree over a point cloud and the induced block partition
// of the N x N index set into admissible (low-rank) and dense blocks.
//

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hmtol/geometry.hpp"

namespace hmtol {

struct BoundingBox {
    Point lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
    Point hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

    void extend(const Point& p) {
        for (int d = 0; d < 3; ++d) {
            lo[d] = std::min(lo[d], p[d]);
            hi[d] = std::max(hi[d], p[d]);
        }
    }

    double extent(int d) const { return hi[d] - lo[d]; }

    int longest_axis() const {
        int axis = 0;
        for (int d = 1; d < 3; ++d)
            if (extent(d) > extent(axis))
                axis = d;
        return axis;
    }

    double diameter() const {
        double s = 0.0;
        for (int d = 0; d < 3; ++d)
            s += extent(d) * extent(d);
        return std::sqrt(s);
    }

    /// Euclidean distance between the two boxes (0 if they intersect).
    double distance(const BoundingBox& o) const {
        double s = 0.0;
        for (int d = 0; d < 3; ++d) {
            const double gap = std::max({0.0, o.lo[d] - hi[d], lo[d] - o.hi[d]});
            s += gap * gap;
        }
        return std::sqrt(s);
    }

    bool contains(const Point& p) const {
        for (int d = 0; d < 3; ++d)
            if (p[d] < lo[d] || p[d] > hi[d])
                return false;
        return true;
    }
};

inline constexpr std::size_t no_child = std::numeric_limits<std::size_t>::max();

struct ClusterNode {
    std::size_t begin = 0; ///< half-open range into the permuted index array
    std::size_t end = 0;
    BoundingBox box;
    std::size_t left = no_child;
    std::size_t right = no_child;

    std::size_t size() const { return end - begin; }
    bool is_leaf() const { return left == no_child; }
};

//
// Binary tree built by bisecting the longest bounding-box axis at the
// coordinate median. order()[k] is the original index of the particle at
// permuted position k; position()[i] is the inverse map.
//
class ClusterTree {
  public:
    ClusterTree(const PointCloud& cloud, std::size_t leaf_size) : leaf_size_(leaf_size) {
        if (cloud.empty())
            throw std::invalid_argument("build_cluster_tree: empty point cloud");
        if (leaf_size == 0)
            throw std::invalid_argument("build_cluster_tree: leaf_size must be at least 1");

        order_.resize(cloud.size());
        for (std::size_t i = 0; i < order_.size(); ++i)
            order_[i] = i;

        nodes_.reserve(2 * (cloud.size() / leaf_size + 1));
        split(cloud, 0, cloud.size());

        position_.resize(order_.size());
        for (std::size_t k = 0; k < order_.size(); ++k)
            position_[order_[k]] = k;
    }

    std::size_t size() const { return order_.size(); }
    std::size_t leaf_size() const { return leaf_size_; }
    std::size_t root() const { return 0; }
    const ClusterNode& node(std::size_t id) const { return nodes_[id]; }
    const std::vector<ClusterNode>& nodes() const { return nodes_; }
    const std::vector<std::size_t>& order() const { return order_; }
    const std::vector<std::size_t>& position() const { return position_; }

    std::vector<std::size_t> leaves() const {
        std::vector<std::size_t> out;
        collect_leaves(root(), out);
        return out;
    }

  private:
    std::size_t split(const PointCloud& cloud, std::size_t begin, std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end, {}, no_child, no_child});

        BoundingBox box;
        for (std::size_t k = begin; k < end; ++k)
            box.extend(cloud[order_[k]]);
        nodes_[id].box = box;

        if (end - begin <= leaf_size_)
            return id;

        // Ties keep the current permuted order, so coincident points split at the index midpoint.
        const int axis = box.longest_axis();
        std::stable_sort(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return cloud[a][axis] < cloud[b][axis]; });

        const std::size_t mid = begin + (end - begin) / 2;
        const std::size_t left = split(cloud, begin, mid);
        const std::size_t right = split(cloud, mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void collect_leaves(std::size_t id, std::vector<std::size_t>& out) const {
        const auto& n = nodes_[id];
        if (n.is_leaf()) {
            out.push_back(id);
            return;
        }
        collect_leaves(n.left, out);
        collect_leaves(n.right, out);
    }

    std::size_t leaf_size_;
    std::vector<ClusterNode> nodes_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> position_;
};

inline ClusterTree build_cluster_tree(const PointCloud& cloud, std::size_t leaf_size = 32) {
    return ClusterTree(cloud, leaf_size);
}

struct Block {
    std::size_t row_node = 0;
    std::size_t col_node = 0;
    std::size_t row_begin = 0;
    std::size_t rows = 0;
    std::size_t col_begin = 0;
    std::size_t cols = 0;
    bool admissible = false;

    std::size_t area() const { return rows * cols; }
    bool contains(std::size_t i, std::size_t j) const {
        return i >= row_begin && i < row_begin + rows && j >= col_begin && j < col_begin + cols;
    }
};

struct BlockPartition {
    std::size_t n = 0;
    double eta = 0.0;
    std::vector<Block> blocks;

    std::size_t area() const {
        std::size_t s = 0;
        for (const auto& b : blocks)
            s += b.area();
        return s;
    }

    std::size_t admissible_area() const {
        std::size_t s = 0;
        for (const auto& b : blocks)
            if (b.admissible)
                s += b.area();
        return s;
    }

    std::size_t admissible_count() const {
        return static_cast<std::size_t>(
            std::count_if(blocks.begin(), blocks.end(), [](const Block& b) { return b.admissible; }));
    }
};

/// Standard eta-admissibility: min(diam) <= eta * dist, with well-separated boxes only.
inline bool is_admissible(const BoundingBox& a, const BoundingBox& b, double eta) {
    const double dist = a.distance(b);
    return dist > 0.0 && std::min(a.diameter(), b.diameter()) <= eta * dist;
}

namespace detail {

inline void partition_pair(const ClusterTree& tree, std::size_t t, std::size_t s, double eta,
                           std::vector<Block>& out) {
    const auto& row = tree.node(t);
    const auto& col = tree.node(s);

    const bool admissible = is_admissible(row.box, col.box, eta);
    if (admissible || (row.is_leaf() && col.is_leaf())) {
        out.push_back({t, s, row.begin, row.size(), col.begin, col.size(), admissible});
        return;
    }

    if (row.is_leaf()) {
        partition_pair(tree, t, col.left, eta, out);
        partition_pair(tree, t, col.right, eta, out);
    } else if (col.is_leaf()) {
        partition_pair(tree, row.left, s, eta, out);
        partition_pair(tree, row.right, s, eta, out);
    } else {
        partition_pair(tree, row.left, col.left, eta, out);
        partition_pair(tree, row.left, col.right, eta, out);
        partition_pair(tree, row.right, col.left, eta, out);
        partition_pair(tree, row.right, col.right, eta, out);
    }
}

} // namespace detail

inline BlockPartition build_block_partition(const ClusterTree& tree, double eta = 2.0) {
    if (!(eta > 0.0))
        throw std::invalid_argument("build_block_partition: eta must be positive");
    BlockPartition p;
    p.n = tree.size();
    p.eta = eta;
    detail::partition_pair(tree, tree.root(), tree.root(), eta, p.blocks);
    return p;
}

} // namespace hmtol

#endif // HMTOL_CLUSTER_TREE_HPP
