#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>
#include <stdexcept>

#include <gtest/gtest.h>

#include "hmtol/cluster_tree.hpp"

using namespace hmtol;

namespace {

std::size_t covered_cells(const BlockPartition& p) {
    std::vector<unsigned char> hit(p.n * p.n, 0);
    for (const auto& b : p.blocks)
        for (std::size_t i = b.row_begin; i < b.row_begin + b.rows; ++i)
            for (std::size_t j = b.col_begin; j < b.col_begin + b.cols; ++j) {
                if (hit[i * p.n + j])
                    return 0; // overlap
                hit[i * p.n + j] = 1;
            }
    return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
}

} // namespace

TEST(ClusterTree, SinglePoint) {
    const auto c = generate_points(Geometry::Cube, 1, 1);
    const auto t = build_cluster_tree(c, 32);
    ASSERT_EQ(t.nodes().size(), 1u);
    EXPECT_TRUE(t.node(t.root()).is_leaf());
    EXPECT_EQ(t.order(), std::vector<std::size_t>{0});
}

TEST(ClusterTree, CollinearSplitInHalves) {
    const std::size_t leaf = 8;
    std::vector<Point> pts;
    for (std::size_t i = 0; i < 2 * leaf; ++i)
        pts.push_back({static_cast<double>(2 * leaf - 1 - i), 0.0, 0.0}); // reversed order
    const PointCloud c(Geometry::Cube, 0, pts);
    const auto t = build_cluster_tree(c, leaf);

    const auto& root = t.node(t.root());
    ASSERT_FALSE(root.is_leaf());
    const auto& l = t.node(root.left);
    const auto& r = t.node(root.right);
    EXPECT_TRUE(l.is_leaf());
    EXPECT_TRUE(r.is_leaf());
    EXPECT_EQ(l.size(), leaf);
    EXPECT_EQ(r.size(), leaf);
    for (std::size_t k = l.begin; k < l.end; ++k)
        EXPECT_LT(c[t.order()[k]][0], static_cast<double>(leaf));
}

TEST(ClusterTree, LeavesConcatenateToRange) {
    for (auto g : {Geometry::Cube, Geometry::Surf, Geometry::Edge}) {
        const auto c = generate_points(g, 1000, 4);
        const auto t = build_cluster_tree(c, 16);
        std::size_t next = 0;
        for (auto id : t.leaves()) {
            const auto& leaf = t.node(id);
            EXPECT_EQ(leaf.begin, next);
            EXPECT_LE(leaf.size(), 16u);
            EXPECT_GE(leaf.size(), 1u);
            next = leaf.end;
        }
        EXPECT_EQ(next, 1000u);

        std::vector<std::size_t> sorted = t.order();
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
            ASSERT_EQ(sorted[i], i);
        for (std::size_t i = 0; i < 1000; ++i)
            EXPECT_EQ(t.order()[t.position()[i]], i);
    }
}

TEST(ClusterTree, BoxesContainTheirPoints) {
    const auto c = generate_points(Geometry::Surf, 700, 9);
    const auto t = build_cluster_tree(c, 10);
    for (const auto& node : t.nodes())
        for (std::size_t k = node.begin; k < node.end; ++k)
            EXPECT_TRUE(node.box.contains(c[t.order()[k]]));
}

TEST(ClusterTree, Errors) {
    const PointCloud empty(Geometry::Cube, 0, {});
    EXPECT_THROW(build_cluster_tree(empty, 4), std::invalid_argument);
    const auto c = generate_points(Geometry::Cube, 10, 1);
    EXPECT_THROW(build_cluster_tree(c, 0), std::invalid_argument);
}

TEST(Admissibility, SeparatedUnitBoxes) {
    BoundingBox a, b;
    a.extend({0, 0, 0});
    a.extend({1, 0, 0});
    b.extend({11, 0, 0});
    b.extend({12, 0, 0});
    EXPECT_DOUBLE_EQ(a.distance(b), 10.0);
    EXPECT_TRUE(is_admissible(a, b, 2.0));
    EXPECT_FALSE(is_admissible(a, b, 0.05));
}

TEST(Admissibility, RootWithItselfNeverAdmissible) {
    const auto c = generate_points(Geometry::Cube, 200, 2);
    const auto t = build_cluster_tree(c, 8);
    for (double eta : {0.5, 2.0, 1e6})
        EXPECT_FALSE(is_admissible(t.node(0).box, t.node(0).box, eta));
}

TEST(BlockPartition, TilesMatrixExactly) {
    for (auto g : {Geometry::Cube, Geometry::Surf, Geometry::Edge})
        for (std::size_t n : {1u, 7u, 100u, 512u}) {
            const auto c = generate_points(g, n, 3);
            const auto t = build_cluster_tree(c, 8);
            const auto p = build_block_partition(t, 2.0);
            EXPECT_EQ(p.area(), n * n);
            EXPECT_EQ(covered_cells(p), n * n);
        }
}

TEST(BlockPartition, StructurallySymmetric) {
    const auto c = generate_points(Geometry::Surf, 512, 6);
    const auto t = build_cluster_tree(c, 16);
    const auto p = build_block_partition(t, 2.0);
    std::set<std::tuple<std::size_t, std::size_t, bool>> blocks;
    for (const auto& b : p.blocks)
        blocks.insert({b.row_node, b.col_node, b.admissible});
    for (const auto& b : p.blocks)
        EXPECT_TRUE(blocks.count({b.col_node, b.row_node, b.admissible}));
}

TEST(BlockPartition, AdmissibleBlocksSatisfyCriterion) {
    const auto c = generate_points(Geometry::Edge, 512, 8);
    const auto t = build_cluster_tree(c, 16);
    const auto p = build_block_partition(t, 2.0);
    for (const auto& b : p.blocks) {
        if (b.admissible)
            EXPECT_TRUE(is_admissible(t.node(b.row_node).box, t.node(b.col_node).box, 2.0));
        else
            EXPECT_TRUE(t.node(b.row_node).is_leaf() && t.node(b.col_node).is_leaf());
    }
}

TEST(BlockPartition, LargerEtaNeverShrinksAdmissibleArea) {
    const auto c = generate_points(Geometry::Cube, 512, 5);
    const auto t = build_cluster_tree(c, 16);
    std::size_t prev = 0;
    for (double eta : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto p = build_block_partition(t, eta);
        EXPECT_GE(p.admissible_area(), prev) << "eta " << eta;
        prev = p.admissible_area();
    }
}

TEST(BlockPartition, LeafCoversWholeMatrix) {
    const auto c = generate_points(Geometry::Cube, 64, 5);
    const auto t = build_cluster_tree(c, 64);
    const auto p = build_block_partition(t, 2.0);
    ASSERT_EQ(p.blocks.size(), 1u);
    EXPECT_FALSE(p.blocks[0].admissible);
    EXPECT_THROW(build_block_partition(t, 0.0), std::invalid_argument);
}
