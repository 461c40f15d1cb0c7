#ifndef HMTOL_LRA_HPP
#define HMTOL_LRA_HPP
//
// Low-rank block approximation: partially pivoted adaptive cross
// approximation followed by SVD recompression of the outer product.
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmtol/tolerance.hpp"

namespace hmtol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

//
// Block approximation u * v^T, u is m x r and v is n x r.
//
struct LowRankFactors {
    Matrix u;
    Matrix v;

    LowRankFactors() = default;
    LowRankFactors(std::size_t m, std::size_t n)
        : u(static_cast<Eigen::Index>(m), 0), v(static_cast<Eigen::Index>(n), 0) {}
    LowRankFactors(Matrix u_, Matrix v_) : u(std::move(u_)), v(std::move(v_)) {
        if (u.cols() != v.cols())
            throw std::invalid_argument("LowRankFactors: factor ranks differ");
    }

    std::size_t rows() const { return static_cast<std::size_t>(u.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(v.rows()); }
    std::size_t rank() const { return static_cast<std::size_t>(u.cols()); }
    std::size_t nnz() const { return (rows() + cols()) * rank(); }

    Matrix to_dense() const {
        if (rank() == 0)
            return Matrix::Zero(u.rows(), v.rows());
        return u * v.transpose();
    }

    /// |u v^T|_F^2 = trace((u^T u)(v^T v)).
    double squared_norm() const {
        if (rank() == 0)
            return 0.0;
        const Matrix gu = u.transpose() * u;
        const Matrix gv = v.transpose() * v;
        return std::max(0.0, gu.cwiseProduct(gv).sum());
    }
};

struct OuterProductSVD {
    Matrix left;  ///< m x r, orthonormal columns
    Vector sigma; ///< nonincreasing
    Matrix right; ///< n x r, orthonormal columns

    std::size_t rank() const { return static_cast<std::size_t>(sigma.size()); }

    /// Factors of the rank-k truncation: left_k * diag(sigma_k), right_k.
    LowRankFactors truncated(std::size_t k) const {
        const auto kk = static_cast<Eigen::Index>(k);
        return LowRankFactors(left.leftCols(kk) * sigma.head(kk).asDiagonal(), right.leftCols(kk));
    }
};

enum class StopKind { RelativeFro, AbsoluteFro };

struct StopCriterion {
    StopKind kind = StopKind::RelativeFro;
    double tol = 0.0;
    std::size_t max_rank = std::numeric_limits<std::size_t>::max();
};

struct AcaResult {
    LowRankFactors factors;
    bool max_rank_reached = false; ///< stopped by max_rank before the criterion held
    std::size_t entries_read = 0;
};

//
// Partially pivoted ACA. The oracle is called as entry(i, j) with block-local
// indices and is only asked for whole rows and columns of the block.
//
// After adding the cross u_k v_k^T the iteration stops when
//   |u_k| |v_k| <= tol                 (AbsoluteFro)
//   |u_k| |v_k| <= tol |U_k V_k^T|_F   (RelativeFro)
// or when every remaining row has a zero residual. A stop is only accepted
// once a few probe rows confirm the residual is below the threshold.
//
template <class Oracle>
AcaResult aca(Oracle&& entry, std::size_t m, std::size_t n, const StopCriterion& stop) {
    if (m == 0 || n == 0)
        throw std::invalid_argument("aca: empty block");

    const std::size_t max_rank = std::min({stop.max_rank, m, n});
    constexpr std::size_t probe_rows = 8;
    constexpr double zero_level = 64.0 * std::numeric_limits<double>::epsilon();

    std::vector<Vector> us;
    std::vector<Vector> vs;
    std::vector<bool> row_used(m, false);
    std::vector<bool> col_used(n, false);

    AcaResult result;
    double approx_norm2 = 0.0;
    bool converged = false;

    Vector row(static_cast<Eigen::Index>(n));
    Vector col(static_cast<Eigen::Index>(m));

    auto first_unused_row = [&]() -> std::size_t {
        for (std::size_t i = 0; i < m; ++i)
            if (!row_used[i])
                return i;
        return m;
    };

    std::size_t pivot_row = 0;
    double threshold = 0.0;

    // Residual of row i into `row`; returns the level below which it counts as zero.
    auto residual_row = [&](std::size_t i) {
        double raw = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[static_cast<Eigen::Index>(j)] = entry(i, j);
            raw = std::max(raw, std::abs(row[static_cast<Eigen::Index>(j)]));
        }
        result.entries_read += n;
        for (std::size_t l = 0; l < us.size(); ++l)
            row -= us[l][static_cast<Eigen::Index>(i)] * vs[l];
        return zero_level * raw;
    };

    // Partial pivoting can stall in one part of a block whose rows cover
    // disjoint regions. Probe evenly spaced unused rows; if their residual
    // extrapolates above the threshold, continue from the worst of them.
    auto probe_converged = [&]() {
        std::vector<std::size_t> unused;
        for (std::size_t i = 0; i < m; ++i)
            if (!row_used[i])
                unused.push_back(i);
        if (unused.empty()) {
            converged = true;
            return true;
        }
        const std::size_t probes = std::min(probe_rows, unused.size());
        double probe_sq = 0.0, worst = 0.0;
        std::size_t worst_row = m;
        for (std::size_t p = 0; p < probes; ++p) {
            const std::size_t i = unused[(2 * p + 1) * unused.size() / (2 * probes)];
            const double zero = residual_row(i);
            const double rmax = row.cwiseAbs().maxCoeff();
            if (rmax <= zero)
                continue;
            const double rn2 = row.squaredNorm();
            probe_sq += rn2;
            if (rn2 > worst) {
                worst = rn2;
                worst_row = i;
            }
        }
        const double estimate = std::sqrt(probe_sq * static_cast<double>(unused.size()) / static_cast<double>(probes));
        if (worst_row == m || estimate <= threshold) {
            converged = true;
            return true;
        }
        pivot_row = worst_row;
        return false;
    };

    while (us.size() < max_rank) {
        const double zero = residual_row(pivot_row);
        row_used[pivot_row] = true;

        std::size_t pivot_col = n;
        double best = zero;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = std::abs(row[static_cast<Eigen::Index>(j)]);
            if (!col_used[j] && a > best) {
                best = a;
                pivot_col = j;
            }
        }

        if (pivot_col == n) {
            // numerically zero residual row
            if (!us.empty()) {
                if (probe_converged())
                    break;
                continue;
            }
            pivot_row = first_unused_row();
            if (pivot_row == m) {
                converged = true;
                break;
            }
            continue;
        }

        Vector v = row / row[static_cast<Eigen::Index>(pivot_col)];

        for (std::size_t i = 0; i < m; ++i)
            col[static_cast<Eigen::Index>(i)] = entry(i, pivot_col);
        result.entries_read += m;
        for (std::size_t l = 0; l < us.size(); ++l)
            col -= vs[l][static_cast<Eigen::Index>(pivot_col)] * us[l];
        col_used[pivot_col] = true;

        Vector u = col;

        // |U_k V_k^T|_F^2 = |U_{k-1} V_{k-1}^T|_F^2 + 2 sum_l (u_l.u)(v_l.v) + |u|^2 |v|^2
        const double un = u.norm();
        const double vn = v.norm();
        double cross = 0.0;
        for (std::size_t l = 0; l < us.size(); ++l)
            cross += us[l].dot(u) * vs[l].dot(v);
        approx_norm2 = std::max(0.0, approx_norm2 + 2.0 * cross + un * un * vn * vn);

        us.push_back(std::move(u));
        vs.push_back(std::move(v));

        threshold = stop.kind == StopKind::AbsoluteFro ? stop.tol : stop.tol * std::sqrt(approx_norm2);
        if (un * vn <= threshold) {
            if (probe_converged())
                break;
            continue;
        }

        // next pivot row: largest entry of the new column among unused rows
        pivot_row = m;
        best = -1.0;
        const Vector& last = us.back();
        for (std::size_t i = 0; i < m; ++i) {
            const double a = std::abs(last[static_cast<Eigen::Index>(i)]);
            if (!row_used[i] && a > best) {
                best = a;
                pivot_row = i;
            }
        }
        if (pivot_row == m) {
            converged = true;
            break;
        }
    }

    const auto r = static_cast<Eigen::Index>(us.size());
    Matrix U(static_cast<Eigen::Index>(m), r);
    Matrix V(static_cast<Eigen::Index>(n), r);
    for (Eigen::Index l = 0; l < r; ++l) {
        U.col(l) = us[static_cast<std::size_t>(l)];
        V.col(l) = vs[static_cast<std::size_t>(l)];
    }
    result.factors = LowRankFactors(std::move(U), std::move(V));
    result.max_rank_reached = !converged;
    return result;
}

//
// Thin SVD of u v^T without forming the product: QR of both factors, then
// the SVD of the small r x r core R_u R_v^T.
//
inline OuterProductSVD outer_product_svd(const LowRankFactors& f) {
    const auto m = static_cast<Eigen::Index>(f.rows());
    const auto n = static_cast<Eigen::Index>(f.cols());
    const auto r = static_cast<Eigen::Index>(f.rank());

    OuterProductSVD s;
    if (r == 0) {
        s.left = Matrix(m, 0);
        s.sigma = Vector(0);
        s.right = Matrix(n, 0);
        return s;
    }

    // thin QR; for r > rows the extra core rows are zero and the SVD still holds
    const Eigen::Index ku = std::min(m, r);
    const Eigen::Index kv = std::min(n, r);
    Eigen::HouseholderQR<Matrix> qru(f.u);
    Eigen::HouseholderQR<Matrix> qrv(f.v);
    const Matrix qu = qru.householderQ() * Matrix::Identity(m, ku);
    const Matrix qv = qrv.householderQ() * Matrix::Identity(n, kv);
    const Matrix ru = qru.matrixQR().topRows(ku).template triangularView<Eigen::Upper>();
    const Matrix rv = qrv.matrixQR().topRows(kv).template triangularView<Eigen::Upper>();

    const Matrix core = ru * rv.transpose(); // ku x kv
    Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);

    s.left = qu * svd.matrixU();
    s.sigma = svd.singularValues();
    s.right = qv * svd.matrixV();
    return s;
}

/// Smallest k with (sum_{i>k} sigma_i^2)^(1/2) <= budget.
inline std::size_t fro_truncation_rank(const Vector& sigma, double budget) {
    const auto r = static_cast<std::size_t>(sigma.size());
    const double budget2 = budget * budget;
    double tail = 0.0;
    std::size_t k = r;
    // walk from the smallest singular value upwards while the tail fits
    while (k > 0) {
        const double s = sigma[static_cast<Eigen::Index>(k - 1)];
        if (tail + s * s > budget2)
            break;
        tail += s * s;
        --k;
    }
    return k;
}

inline LowRankFactors truncate_fro(const OuterProductSVD& s, double budget) {
    if (budget < 0.0)
        throw std::invalid_argument("truncate_fro: negative budget");
    return s.truncated(fro_truncation_rank(s.sigma, budget));
}

/// |B_k - B_r|_max where B_k keeps the k leading singular triplets.
inline double truncation_max_deviation(const OuterProductSVD& s, std::size_t k) {
    const auto r = static_cast<Eigen::Index>(s.rank());
    const auto kk = static_cast<Eigen::Index>(k);
    if (kk >= r)
        return 0.0;
    const Matrix tail = s.left.middleCols(kk, r - kk) * s.sigma.segment(kk, r - kk).asDiagonal() *
                        s.right.middleCols(kk, r - kk).transpose();
    return tail.cwiseAbs().maxCoeff();
}

//
// Binary search over the retained rank for the smallest k whose element-wise
// deviation from the input fits the budget; each probe forms the full m x n
// deviation.
//
inline std::size_t maxnorm_truncation_rank(const OuterProductSVD& s, double budget) {
    std::size_t lo = 0;
    std::size_t hi = s.rank(); // deviation at hi is zero, so hi always satisfies the budget
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (truncation_max_deviation(s, mid) <= budget)
            hi = mid;
        else
            lo = mid + 1;
    }
    return hi;
}

inline LowRankFactors truncate_maxnorm(const OuterProductSVD& s, double budget) {
    if (budget < 0.0)
        throw std::invalid_argument("truncate_maxnorm: negative budget");
    return s.truncated(maxnorm_truncation_rank(s, budget));
}

//
// Two-stage tolerance split for a block budget: ACA runs to alpha * safety of
// the budget, recompression may spend beta of it. For relative budgets
// beta = (1 - alpha) / (1 + alpha eps) so that the recompression tolerance
// may be taken relative to the ACA output instead of the unknown block.
//
struct BlockSchedule {
    StopCriterion aca;
    double beta = 0.0;
};

inline BlockSchedule block_schedule(const BlockBudget& budget, double alpha, double aca_safety) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(aca_safety > 0.0 && aca_safety <= 1.0))
        throw std::invalid_argument("aca_safety must lie in (0, 1]");
    if (!(budget.value > 0.0))
        throw std::invalid_argument("block budget must be positive");

    BlockSchedule s;
    s.aca.tol = alpha * budget.value * aca_safety;
    if (budget.kind == BudgetKind::RelativeFro) {
        s.aca.kind = StopKind::RelativeFro;
        s.beta = (1.0 - alpha) / (1.0 + alpha * budget.value);
    } else {
        // max-norm budgets also drive ACA in the Frobenius norm, which bounds the max-norm
        s.aca.kind = StopKind::AbsoluteFro;
        s.beta = 1.0 - alpha;
    }
    return s;
}

struct BlockApproximation {
    LowRankFactors factors;
    std::size_t aca_rank = 0;
    bool max_rank_reached = false;
    std::size_t entries_read = 0;
};

template <class Oracle>
BlockApproximation build_block(Oracle&& entry, std::size_t m, std::size_t n, const BlockBudget& budget,
                               double alpha = 0.5, double aca_safety = 0.1,
                               std::size_t max_rank = std::numeric_limits<std::size_t>::max()) {
    BlockSchedule schedule = block_schedule(budget, alpha, aca_safety);
    schedule.aca.max_rank = max_rank;

    AcaResult first = aca(entry, m, n, schedule.aca);

    BlockApproximation out;
    out.aca_rank = first.factors.rank();
    out.max_rank_reached = first.max_rank_reached;
    out.entries_read = first.entries_read;

    if (first.factors.rank() == 0 || out.max_rank_reached) {
        out.factors = std::move(first.factors);
        return out;
    }

    const OuterProductSVD svd = outer_product_svd(first.factors);
    switch (budget.kind) {
    case BudgetKind::RelativeFro:
        out.factors = truncate_fro(svd, schedule.beta * budget.value * svd.sigma.norm());
        break;
    case BudgetKind::AbsoluteFro:
        out.factors = truncate_fro(svd, schedule.beta * budget.value);
        break;
    case BudgetKind::AbsoluteMax:
        out.factors = truncate_maxnorm(svd, schedule.beta * budget.value);
        break;
    }
    return out;
}

} // namespace hmtol

#endif // HMTOL_LRA_HPP
