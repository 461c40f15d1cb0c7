#ifndef HMTOL_HMATRIX_HPP
#define HMTOL_HMATRIX_HPP
//
// H-matrix assembly under a tolerance policy, matrix-vector product, and
// measurement of storage and achieved error.
//

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hmtol/cluster_tree.hpp"
#include "hmtol/geometry.hpp"
#include "hmtol/lra.hpp"
#include "hmtol/norm_estimation.hpp"
#include "hmtol/random.hpp"
#include "hmtol/tolerance.hpp"

namespace hmtol {

using BlockData = std::variant<Matrix, LowRankFactors>;

inline std::size_t block_nnz(const BlockData& d) {
    if (const auto* lr = std::get_if<LowRankFactors>(&d))
        return lr->nnz();
    const auto& m = std::get<Matrix>(d);
    return static_cast<std::size_t>(m.rows() * m.cols());
}

//
// Blocks are stored in permuted index space; order()[k] is the original index
// of permuted position k.
//
class HMatrix {
  public:
    HMatrix(std::vector<std::size_t> order, BlockPartition partition, std::vector<BlockData> data)
        : order_(std::move(order)), partition_(std::move(partition)), data_(std::move(data)) {
        if (partition_.n != order_.size())
            throw std::invalid_argument("HMatrix: partition and permutation sizes differ");
        if (data_.size() != partition_.blocks.size())
            throw std::invalid_argument("HMatrix: one storage entry per block is required");

        position_.assign(order_.size(), std::numeric_limits<std::size_t>::max());
        for (std::size_t k = 0; k < order_.size(); ++k) {
            if (order_[k] >= order_.size() || position_[order_[k]] != std::numeric_limits<std::size_t>::max())
                throw std::invalid_argument("HMatrix: order is not a permutation");
            position_[order_[k]] = k;
        }

        for (std::size_t b = 0; b < data_.size(); ++b) {
            const auto& blk = partition_.blocks[b];
            const auto& d = data_[b];
            std::size_t rows = 0, cols = 0;
            if (const auto* lr = std::get_if<LowRankFactors>(&d)) {
                rows = lr->rows();
                cols = lr->cols();
            } else {
                rows = static_cast<std::size_t>(std::get<Matrix>(d).rows());
                cols = static_cast<std::size_t>(std::get<Matrix>(d).cols());
            }
            if (rows != blk.rows || cols != blk.cols)
                throw std::invalid_argument("HMatrix: block storage does not match block dimensions");
        }
    }

    std::size_t size() const { return order_.size(); }
    const std::vector<std::size_t>& order() const { return order_; }
    const std::vector<std::size_t>& position() const { return position_; }
    const BlockPartition& partition() const { return partition_; }
    const std::vector<Block>& blocks() const { return partition_.blocks; }
    const BlockData& data(std::size_t b) const { return data_[b]; }
    bool is_low_rank(std::size_t b) const { return std::holds_alternative<LowRankFactors>(data_[b]); }

    std::size_t nnz() const {
        std::size_t s = 0;
        for (const auto& d : data_)
            s += block_nnz(d);
        return s;
    }

    double compression() const {
        const double n2 = static_cast<double>(size()) * static_cast<double>(size());
        const auto z = nnz();
        return z == 0 ? std::numeric_limits<double>::infinity() : n2 / static_cast<double>(z);
    }

    /// Dense copy of block b (permuted indices).
    Matrix block_dense(std::size_t b) const {
        if (const auto* lr = std::get_if<LowRankFactors>(&data_[b]))
            return lr->to_dense();
        return std::get<Matrix>(data_[b]);
    }

  private:
    std::vector<std::size_t> order_;
    std::vector<std::size_t> position_;
    BlockPartition partition_;
    std::vector<BlockData> data_;
};

/// y = H x in original index order.
inline std::vector<double> mvp(const HMatrix& h, std::span<const double> x) {
    const std::size_t n = h.size();
    if (x.size() != n)
        throw std::invalid_argument("mvp: vector length does not match matrix size");

    const auto& order = h.order();
    std::vector<double> xp(n), yp(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        xp[k] = x[order[k]];

    for (std::size_t b = 0; b < h.blocks().size(); ++b) {
        const auto& blk = h.blocks()[b];
        const double* xs = xp.data() + blk.col_begin;
        double* ys = yp.data() + blk.row_begin;

        if (const auto* lr = std::get_if<LowRankFactors>(&h.data(b))) {
            if (lr->rank() == 0)
                continue;
            const Eigen::Map<const Vector> xv(xs, static_cast<Eigen::Index>(blk.cols));
            Eigen::Map<Vector> yv(ys, static_cast<Eigen::Index>(blk.rows));
            const Vector t = lr->v.transpose() * xv;
            yv.noalias() += lr->u * t;
        } else {
            // plain row-ordered summation, so a single dense block reproduces a naive product exactly
            const auto& d = std::get<Matrix>(h.data(b));
            for (std::size_t i = 0; i < blk.rows; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < blk.cols; ++j)
                    s += d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * xs[j];
                ys[i] += s;
            }
        }
    }

    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k)
        y[order[k]] = yp[k];
    return y;
}

/// Exact Frobenius norm of the representation.
inline double fro_norm(const HMatrix& h) {
    double s = 0.0;
    for (std::size_t b = 0; b < h.blocks().size(); ++b) {
        if (const auto* lr = std::get_if<LowRankFactors>(&h.data(b)))
            s += lr->squared_norm();
        else
            s += std::get<Matrix>(h.data(b)).squaredNorm();
    }
    return std::sqrt(s);
}

struct BuildConfig {
    TolerancePolicy policy;
    double alpha = 0.5;
    double aca_safety = 0.1;
    double eta = 2.0;
    std::size_t leaf_size = 32;
    std::uint64_t seed = 0;
    /// Estimate the policy's Frobenius norm was derived from, if any.
    std::optional<NormEstimate> norm_estimate;
    bool allow_unconverged_norm = false;
};

struct Timings {
    double tree_ms = 0.0;
    double norm_ms = 0.0;
    double assemble_ms = 0.0;
    double error_ms = 0.0;
};

struct ErrorMeasure {
    bool sampled = false;
    double rel_fro = 0.0;    ///< |B - H|_F / |B|_F
    double abs_fro = 0.0;    ///< |B - H|_F (estimate when sampled)
    double matrix_fro = 0.0; ///< |B|_F (estimate when sampled)
    double max_abs = 0.0;    ///< max |B - H|_ij (over sampled columns when sampled)
    double rel_jsd = 0.0;    ///< relative jackknife sd of rel_fro, sampled mode only
    std::size_t columns = 0;
    std::vector<BlockError> blocks; ///< exact mode only, in partition order
};

struct BuildReport {
    Method method = Method::BREM;
    std::size_t n = 0;
    std::size_t nnz = 0;
    double compression = 0.0;
    std::size_t block_count = 0;
    std::size_t dense_blocks = 0;
    std::size_t low_rank_blocks = 0;
    std::size_t fallback_blocks = 0; ///< admissible blocks stored dense
    std::size_t partition_area = 0;
    std::vector<std::size_t> ranks;  ///< ranks of low-rank blocks in partition order
    double nominal_epsilon = 0.0;
    double effective_epsilon = 0.0;
    std::optional<double> matrix_norm;
    std::optional<ErrorMeasure> error;
    Timings timings;
};

struct BuildResult {
    HMatrix matrix;
    BuildReport report;
};

namespace detail {

using clock = std::chrono::steady_clock;

inline double elapsed_ms(clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
}

} // namespace detail

//
// Builds every block of the partition: admissible blocks by ACA plus
// recompression against their budget, the rest densely from exact entries.
// The oracle takes original (unpermuted) indices.
//
template <class Oracle>
BuildResult assemble(const Oracle& entry, const ClusterTree& tree, const BlockPartition& partition,
                     const BuildConfig& config) {
    const auto& policy = config.policy;
    if (policy.size() != tree.size() || partition.n != tree.size())
        throw std::invalid_argument("assemble: policy, tree and partition sizes differ");
    policy.require_norm();
    if (config.norm_estimate && !config.norm_estimate->converged && !config.allow_unconverged_norm)
        throw std::runtime_error("assemble: norm estimate did not converge");
    // validates alpha and aca_safety up front
    (void)block_schedule({BudgetKind::RelativeFro, 1.0}, config.alpha, config.aca_safety);

    const auto t0 = detail::clock::now();
    const auto& order = tree.order();

    BuildReport report;
    report.method = policy.method();
    report.n = tree.size();
    report.block_count = partition.blocks.size();
    report.partition_area = partition.area();
    report.nominal_epsilon = policy.epsilon();
    report.effective_epsilon = policy.epsilon();
    report.matrix_norm = policy.matrix_norm();
    if (config.norm_estimate && policy.method() == Method::MREM && config.norm_estimate->mu > 0.0)
        report.effective_epsilon =
            policy.epsilon() * *policy.matrix_norm() / config.norm_estimate->fro_norm();

    std::vector<BlockData> data;
    data.reserve(partition.blocks.size());

    for (const auto& blk : partition.blocks) {
        auto local = [&](std::size_t i, std::size_t j) {
            return entry(order[blk.row_begin + i], order[blk.col_begin + j]);
        };
        auto dense = [&]() {
            Matrix d(static_cast<Eigen::Index>(blk.rows), static_cast<Eigen::Index>(blk.cols));
            for (std::size_t j = 0; j < blk.cols; ++j)
                for (std::size_t i = 0; i < blk.rows; ++i)
                    d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = local(i, j);
            return d;
        };

        if (!blk.admissible) {
            data.emplace_back(dense());
            ++report.dense_blocks;
            continue;
        }

        const BlockBudget budget = block_budget(policy, blk.rows, blk.cols);
        BlockApproximation approx = build_block(local, blk.rows, blk.cols, budget, config.alpha, config.aca_safety);

        if (approx.max_rank_reached || approx.factors.nnz() > blk.area()) {
            data.emplace_back(dense());
            ++report.dense_blocks;
            ++report.fallback_blocks;
        } else {
            report.ranks.push_back(approx.factors.rank());
            data.emplace_back(std::move(approx.factors));
            ++report.low_rank_blocks;
        }
    }

    HMatrix h(order, partition, std::move(data));
    report.nnz = h.nnz();
    report.compression = h.compression();
    report.timings.assemble_ms = detail::elapsed_ms(t0);
    return {std::move(h), std::move(report)};
}

/// Convenience overload: builds the tree and partition from the config.
inline BuildResult assemble(const PointCloud& cloud, const Kernel& kernel, const BuildConfig& config) {
    const auto t0 = detail::clock::now();
    const ClusterTree tree = build_cluster_tree(cloud, config.leaf_size);
    const BlockPartition partition = build_block_partition(tree, config.eta);
    const double tree_ms = detail::elapsed_ms(t0);

    BuildResult r = assemble(KernelMatrix(cloud, kernel), tree, partition, config);
    r.report.timings.tree_ms = tree_ms;
    return r;
}

struct ErrorMode {
    enum class Kind { Exact, Sampled };
    Kind kind = Kind::Exact;
    std::size_t columns = 0;
    std::uint64_t seed = 0;

    static ErrorMode exact() { return {}; }
    static ErrorMode sampled(std::size_t columns, std::uint64_t seed) { return {Kind::Sampled, columns, seed}; }
};

namespace detail {

inline ErrorMeasure exact_error(const HMatrix& h, const auto& entry) {
    const auto& order = h.order();
    ErrorMeasure out;
    out.blocks.reserve(h.blocks().size());

    double err2 = 0.0, ref2 = 0.0;
    Vector approx;
    for (std::size_t b = 0; b < h.blocks().size(); ++b) {
        const auto& blk = h.blocks()[b];
        const auto* lr = std::get_if<LowRankFactors>(&h.data(b));
        const auto* dn = std::get_if<Matrix>(&h.data(b));

        double block_err2 = 0.0;
        for (std::size_t j = 0; j < blk.cols; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            if (lr) {
                if (lr->rank() > 0)
                    approx = lr->u * lr->v.row(jj).transpose();
                else
                    approx = Vector::Zero(static_cast<Eigen::Index>(blk.rows));
            } else {
                approx = dn->col(jj);
            }
            const std::size_t col = order[blk.col_begin + j];
            for (std::size_t i = 0; i < blk.rows; ++i) {
                const double exact = entry(order[blk.row_begin + i], col);
                const double e = exact - approx[static_cast<Eigen::Index>(i)];
                block_err2 += e * e;
                ref2 += exact * exact;
                out.max_abs = std::max(out.max_abs, std::abs(e));
            }
        }
        err2 += block_err2;
        out.blocks.push_back({blk.rows, blk.cols, std::sqrt(block_err2)});
    }

    out.abs_fro = std::sqrt(err2);
    out.matrix_fro = std::sqrt(ref2);
    out.rel_fro = ref2 > 0.0 ? out.abs_fro / out.matrix_fro : 0.0;
    out.columns = h.size();
    return out;
}

inline ErrorMeasure sampled_error(const HMatrix& h, const auto& entry, std::size_t columns, std::uint64_t seed) {
    const std::size_t n = h.size();
    const std::size_t count = std::min(std::max<std::size_t>(columns, 2), n);
    const auto& order = h.order();
    const auto& position = h.position();

    IndexSampler sampler(n, seed);
    std::vector<double> xe, xb;
    xe.reserve(count);
    xb.reserve(count);

    ErrorMeasure out;
    out.sampled = true;
    std::vector<double> hcol(n);

    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t col = sampler.draw();
        const std::size_t p = position[col];

        // column p of H in permuted row order
        std::fill(hcol.begin(), hcol.end(), 0.0);
        for (std::size_t b = 0; b < h.blocks().size(); ++b) {
            const auto& blk = h.blocks()[b];
            if (p < blk.col_begin || p >= blk.col_begin + blk.cols)
                continue;
            const auto jj = static_cast<Eigen::Index>(p - blk.col_begin);
            Eigen::Map<Vector> dst(hcol.data() + blk.row_begin, static_cast<Eigen::Index>(blk.rows));
            if (const auto* lr = std::get_if<LowRankFactors>(&h.data(b))) {
                if (lr->rank() > 0)
                    dst = lr->u * lr->v.row(jj).transpose();
            } else {
                dst = std::get<Matrix>(h.data(b)).col(jj);
            }
        }

        double e2 = 0.0, b2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double exact = entry(order[k], col);
            const double e = exact - hcol[k];
            e2 += e * e;
            b2 += exact * exact;
            out.max_abs = std::max(out.max_abs, std::abs(e));
        }
        xe.push_back(static_cast<double>(n) * e2);
        xb.push_back(static_cast<double>(n) * b2);
    }

    double se = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        se += xe[i];
        sb += xb[i];
    }
    const double dn = static_cast<double>(count);
    out.abs_fro = std::sqrt(se / dn);
    out.matrix_fro = std::sqrt(sb / dn);
    out.rel_fro = sb > 0.0 ? std::sqrt(se / sb) : 0.0;
    out.columns = count;

    // delete-1 jackknife of the ratio estimator
    std::vector<double> loo(count);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double db = sb - xb[i];
        loo[i] = db > 0.0 ? std::sqrt((se - xe[i]) / db) : 0.0;
        loo_mean += loo[i];
    }
    loo_mean /= dn;
    double ss = 0.0;
    for (double v : loo)
        ss += (v - loo_mean) * (v - loo_mean);
    const double fpc = 1.0 - dn / static_cast<double>(n);
    const double jsd = std::sqrt(std::max(0.0, (dn - 1.0) / dn * ss * fpc));
    out.rel_jsd = out.rel_fro > 0.0 ? jsd / out.rel_fro : 0.0;
    return out;
}

} // namespace detail

/// Achieved error of H against the oracle (original indices).
template <class Oracle>
ErrorMeasure achieved_error(const HMatrix& h, const Oracle& entry, const ErrorMode& mode = ErrorMode::exact()) {
    if (mode.kind == ErrorMode::Kind::Exact)
        return detail::exact_error(h, entry);
    return detail::sampled_error(h, entry, mode.columns, mode.seed);
}

/// Runs achieved_error and stores the result and its timing in the report.
template <class Oracle>
void measure(BuildResult& result, const Oracle& entry, const ErrorMode& mode = ErrorMode::exact()) {
    const auto t0 = detail::clock::now();
    result.report.error = achieved_error(result.matrix, entry, mode);
    result.report.timings.error_ms = detail::elapsed_ms(t0);
}

/// nnz(BREM) / nnz(MREM); greater than one means MREM stores less.
inline double improvement_factor(std::size_t nnz_brem, std::size_t nnz_mrem) {
    if (nnz_mrem == 0)
        return nnz_brem == 0 ? 1.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(nnz_brem) / static_cast<double>(nnz_mrem);
}

inline double improvement_factor(const BuildReport& brem, const BuildReport& mrem) {
    return improvement_factor(brem.nnz, mrem.nnz);
}

} // namespace hmtol

#endif // HMTOL_HMATRIX_HPP
