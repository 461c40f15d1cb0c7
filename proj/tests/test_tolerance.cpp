#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "hmtol/random.hpp"
#include "hmtol/tolerance.hpp"

using namespace hmtol;

TEST(Tolerance, BremPassesEpsilonThrough) {
    const auto p = TolerancePolicy::brem(1e-5, 100);
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{1, 1}, {10, 20}, {64, 3}}) {
        const auto b = block_budget(p, m, n);
        EXPECT_EQ(b.kind, BudgetKind::RelativeFro);
        EXPECT_EQ(b.value, 1e-5);
    }
}

TEST(Tolerance, MremBudget) {
    const auto b = block_budget(TolerancePolicy::mrem(1e-5, 100, 50.0), 10, 20);
    EXPECT_EQ(b.kind, BudgetKind::AbsoluteFro);
    EXPECT_NEAR(b.value, 7.0711e-5, 1e-9);
    EXPECT_NEAR(b.value, 1e-5 * std::sqrt(200.0) / 100.0 * 50.0, 1e-18);
}

TEST(Tolerance, MremMaxBudget) {
    const auto b = block_budget(TolerancePolicy::mrem_max(1e-3, 1000, 250.0), 7, 9);
    EXPECT_EQ(b.kind, BudgetKind::AbsoluteMax);
    EXPECT_NEAR(b.value, 2.5e-4, 1e-18);
}

TEST(Tolerance, MissingNorm) {
    const TolerancePolicy p(Method::MREM, 1e-5, 100);
    EXPECT_THROW(block_budget(p, 10, 10), std::invalid_argument);
    EXPECT_NO_THROW(block_budget(p.with_norm(3.0), 10, 10));
    EXPECT_THROW(block_budget(TolerancePolicy(Method::MREMmax, 1e-5, 100), 1, 1), std::invalid_argument);
}

TEST(Tolerance, BadArguments) {
    EXPECT_THROW(TolerancePolicy::brem(0.0, 10), std::invalid_argument);
    EXPECT_THROW(TolerancePolicy::brem(1e-5, 0), std::invalid_argument);
    EXPECT_THROW(TolerancePolicy(Method::BREM, 1e-5, 10, 1.0), std::invalid_argument);
    EXPECT_THROW(TolerancePolicy::mrem(1e-5, 10, -1.0), std::invalid_argument);
    EXPECT_THROW(TolerancePolicy::mrem(1e-5, 10, INFINITY), std::invalid_argument);
    EXPECT_THROW(block_budget(TolerancePolicy::brem(1e-5, 10), 0, 3), std::invalid_argument);
    EXPECT_THROW(parse_method("HREM"), std::invalid_argument);
    for (auto m : {Method::BREM, Method::MREM, Method::MREMmax})
        EXPECT_EQ(parse_method(to_string(m)), m);
}

TEST(Fnpe, Values) {
    EXPECT_DOUBLE_EQ(fnpe(200.0, 10, 20), 1.0);
    EXPECT_DOUBLE_EQ(fnpe(0.0, 10, 20), 0.0);
    EXPECT_DOUBLE_EQ(fnpe(50.0 * 50.0, 100, 100), 0.25);
}

namespace {

// Tiling of an N x N matrix into rows x cols rectangles, k x k grid.
std::vector<std::pair<std::size_t, std::size_t>> grid_tiling(std::size_t n, std::size_t k) {
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < k; ++i)
        sizes.push_back(n / k + (i < n % k ? 1 : 0));
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (auto r : sizes)
        for (auto c : sizes)
            out.push_back({r, c});
    return out;
}

} // namespace

TEST(GlobalBound, AllZeroErrors) {
    const auto p = TolerancePolicy::mrem(1e-5, 100, 50.0);
    std::vector<BlockError> e;
    for (auto [m, n] : grid_tiling(100, 5))
        e.push_back({m, n, 0.0});
    const auto r = verify_global_bound(e, p, 50.0);
    EXPECT_TRUE(r.satisfied);
    EXPECT_EQ(r.ratio, 0.0);
}

TEST(GlobalBound, MremBudgetsAggregateToEquality) {
    const std::size_t n = 97;
    const double norm = 12.5, eps = 1e-4;
    const auto p = TolerancePolicy::mrem(eps, n, norm);
    std::vector<BlockError> e;
    for (auto [r, c] : grid_tiling(n, 7))
        e.push_back({r, c, block_budget(p, r, c).value});
    const auto rep = verify_global_bound(e, p, norm);
    EXPECT_NEAR(rep.error, eps * norm, 1e-12 * eps * norm);
    EXPECT_NEAR(rep.ratio, 1.0, 1e-12);
}

TEST(GlobalBound, RandomErrorsBelowBudgetSatisfyBound) {
    Rng rng(17);
    const std::size_t n = 128;
    for (int trial = 0; trial < 50; ++trial) {
        const double norm = rng.uniform(0.1, 100.0);
        const auto p = TolerancePolicy::mrem(1e-5, n, norm);
        std::vector<BlockError> e;
        double sum = 0.0;
        for (auto [r, c] : grid_tiling(n, 1 + rng.index(10))) {
            const double err = rng.uniform() * block_budget(p, r, c).value;
            sum += err * err;
            e.push_back({r, c, err});
        }
        const auto rep = verify_global_bound(e, p, norm);
        EXPECT_TRUE(rep.satisfied);
        EXPECT_NEAR(rep.error, std::sqrt(sum), 1e-12 * std::sqrt(sum));
    }
}

TEST(GlobalBound, ExceedingBudgetIsReported) {
    const auto p = TolerancePolicy::mrem(1e-5, 10, 1.0);
    std::vector<BlockError> e{{10, 10, 2e-5}};
    const auto r = verify_global_bound(e, p, 1.0);
    EXPECT_FALSE(r.satisfied);
    EXPECT_NEAR(r.ratio, 2.0, 1e-12);
}

TEST(NeitherDominates, BremAndMremBudgetsCross) {
    // BREM spends eps |B_i|_F on block i, MREM spends eps sqrt(m n) / N |B|_F.
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = 60;
    const double eps = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        const auto tiles = grid_tiling(n, 4);
        std::vector<double> block_norm2;
        double total = 0.0;
        for (std::size_t t = 0; t < tiles.size(); ++t) {
            const double scale = std::pow(10.0, 4.0 * unif(gen) - 2.0); // nonuniform FNPE
            double s = 0.0;
            for (std::size_t k = 0; k < tiles[t].first * tiles[t].second; ++k) {
                const double x = scale * (unif(gen) - 0.5);
                s += x * x;
            }
            block_norm2.push_back(s);
            total += s;
        }
        const auto p = TolerancePolicy::mrem(eps, n, std::sqrt(total));
        bool brem_larger = false, brem_smaller = false;
        for (std::size_t t = 0; t < tiles.size(); ++t) {
            const double brem = eps * std::sqrt(block_norm2[t]);
            const double mrem = block_budget(p, tiles[t].first, tiles[t].second).value;
            brem_larger |= brem > mrem;
            brem_smaller |= brem < mrem;
        }
        EXPECT_TRUE(brem_larger && brem_smaller);
    }
}
