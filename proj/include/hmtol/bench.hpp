#ifndef HMTOL_BENCH_HPP
#define HMTOL_BENCH_HPP
//
// Experiment harness: size and tolerance sweeps over geometries, kernels and
// tolerance-mapping methods, one CSV row per build.
//

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hmtol/cluster_tree.hpp"
#include "hmtol/geometry.hpp"
#include "hmtol/hmatrix.hpp"
#include "hmtol/norm_estimation.hpp"
#include "hmtol/tolerance.hpp"

namespace hmtol::bench {

struct ExperimentSpec {
    std::vector<Geometry> geometries{Geometry::Cube, Geometry::Surf, Geometry::Edge};
    std::vector<Kernel> kernels{Kernel::inverse_power(1), Kernel::inverse_power(2), Kernel::inverse_power(3),
                                Kernel::log()};
    std::vector<std::size_t> sizes{512, 1024, 2048, 4096, 8192};
    std::vector<double> epsilons{1e-5};
    std::vector<Method> methods{Method::BREM, Method::MREM};
    std::uint64_t seed = 1;
    double eta = 2.0;
    std::size_t leaf_size = 32;
    std::size_t exact_error_max_n = 8192; ///< larger problems use the sampled error estimate
    std::size_t sampled_error_columns = 256;
    bool measure_error = true;
    double alpha = 0.5;
    double norm_jsd_tol = 1.0 / 50.0;
    bool norm_jsd_relative = true;

    void validate() const {
        if (geometries.empty() || kernels.empty() || sizes.empty() || epsilons.empty() || methods.empty())
            throw std::invalid_argument("experiment spec needs nonempty geometry, kernel, N, eps and method lists");
        for (auto n : sizes)
            if (n == 0)
                throw std::invalid_argument("problem sizes must be positive");
        for (auto e : epsilons)
            if (!(e > 0.0))
                throw std::invalid_argument("tolerances must be positive");
        if (leaf_size == 0)
            throw std::invalid_argument("leaf size must be positive");
        if (!(eta > 0.0))
            throw std::invalid_argument("eta must be positive");
    }
};

struct ResultRow {
    std::string geometry;
    std::string kernel;
    std::size_t n = 0;
    double epsilon = 0.0;
    std::string method;
    std::size_t nnz = 0;
    double compression = 0.0;
    double achieved_rel_error = 0.0;
    std::string error_mode; ///< exact, sampled, none, or failed
    double norm_mu = 0.0;
    double norm_jsd = 0.0;
    std::size_t norm_cols = 0;
    std::size_t rank_min = 0;
    std::size_t rank_med = 0;
    std::size_t rank_max = 0;
    double t_tree_ms = 0.0;
    double t_norm_ms = 0.0;
    double t_assemble_ms = 0.0;
    double t_error_ms = 0.0;
    std::uint64_t seed = 0;

    // not part of the CSV
    std::size_t block_count = 0;
    std::size_t partition_area = 0;

    bool failed() const { return error_mode == "failed"; }
};

inline constexpr std::string_view csv_header =
    "geometry,kernel,N,epsilon,method,nnz,compression,achieved_rel_error,error_mode,norm_mu,norm_jsd,"
    "norm_cols,rank_min,rank_med,rank_max,t_tree_ms,t_norm_ms,t_assemble_ms,t_error_ms,seed";

/// Columns that hold wall times and are excluded from reproducibility comparisons.
inline constexpr std::size_t first_timing_column = 15;
inline constexpr std::size_t last_timing_column = 18;

namespace detail {

inline std::string fmt_real(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline std::string fmt_ms(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

inline std::size_t parse_count(const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-')
        throw std::invalid_argument("not a count: '" + s + "'");
    return static_cast<std::size_t>(v);
}

/// "4096" or "2^12".
inline std::size_t parse_size(const std::string& s) {
    const auto caret = s.find('^');
    if (caret == std::string::npos)
        return parse_count(s);
    const std::size_t base = parse_count(s.substr(0, caret));
    const std::size_t exp = parse_count(s.substr(caret + 1));
    std::size_t v = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (v > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(base, 1))
            throw std::invalid_argument("size out of range: '" + s + "'");
        v *= base;
    }
    return v;
}

} // namespace detail

/// Comma list of sizes ("512,1024", "2^9,2^10") or a power-of-two range "2^9..2^13".
inline std::vector<std::size_t> parse_sizes(std::string_view text) {
    const std::string s = detail::trim(text);
    const auto dots = s.find("..");
    if (dots != std::string::npos) {
        const std::string a = s.substr(0, dots);
        const std::string b = s.substr(dots + 2);
        if (a.rfind("2^", 0) != 0 || b.rfind("2^", 0) != 0)
            throw std::invalid_argument("size ranges must read 2^a..2^b");
        const std::size_t lo = detail::parse_count(a.substr(2));
        const std::size_t hi = detail::parse_count(b.substr(2));
        if (lo > hi || hi >= 63)
            throw std::invalid_argument("bad size range '" + s + "'");
        std::vector<std::size_t> out;
        for (std::size_t e = lo; e <= hi; ++e)
            out.push_back(std::size_t{1} << e);
        return out;
    }
    std::vector<std::size_t> out;
    for (const auto& part : detail::split(s, ','))
        out.push_back(detail::parse_size(detail::trim(part)));
    return out;
}

/// Comma list of tolerances, or a decade range "1e-2..1e-8".
inline std::vector<double> parse_epsilons(std::string_view text) {
    const std::string s = detail::trim(text);
    const auto dots = s.find("..");
    if (dots != std::string::npos) {
        const double a = detail::parse_real(s.substr(0, dots));
        const double b = detail::parse_real(s.substr(dots + 2));
        if (!(a > 0.0 && b > 0.0))
            throw std::invalid_argument("tolerance range bounds must be positive");
        const int ea = static_cast<int>(std::lround(std::log10(a)));
        const int eb = static_cast<int>(std::lround(std::log10(b)));
        std::vector<double> out;
        const int step = ea <= eb ? 1 : -1;
        for (int e = ea;; e += step) {
            out.push_back(std::pow(10.0, e));
            if (e == eb)
                break;
        }
        return out;
    }
    std::vector<double> out;
    for (const auto& part : detail::split(s, ','))
        out.push_back(detail::parse_real(detail::trim(part)));
    return out;
}

inline std::string to_csv(const ResultRow& r) {
    using detail::fmt_ms;
    using detail::fmt_real;
    std::string s;
    s += r.geometry + ',' + r.kernel + ',' + std::to_string(r.n) + ',' + fmt_real(r.epsilon) + ',' + r.method + ',';
    s += std::to_string(r.nnz) + ',' + fmt_real(r.compression) + ',' + fmt_real(r.achieved_rel_error) + ',';
    s += r.error_mode + ',' + fmt_real(r.norm_mu) + ',' + fmt_real(r.norm_jsd) + ',' + std::to_string(r.norm_cols) + ',';
    s += std::to_string(r.rank_min) + ',' + std::to_string(r.rank_med) + ',' + std::to_string(r.rank_max) + ',';
    s += fmt_ms(r.t_tree_ms) + ',' + fmt_ms(r.t_norm_ms) + ',' + fmt_ms(r.t_assemble_ms) + ',' + fmt_ms(r.t_error_ms) + ',';
    s += std::to_string(r.seed);
    return s;
}

/// Reads a CSV with the result header (columns located by name). Throws with the line number on malformed input.
inline std::vector<ResultRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        return {};
    const auto names = detail::split(detail::trim(line), ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < names.size(); ++i)
        col[names[i]] = i;
    for (const auto& required : detail::split(csv_header, ','))
        if (!col.count(required))
            throw std::runtime_error("csv line 1: missing column '" + required + "'");

    std::vector<ResultRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        const auto f = detail::split(detail::trim(line), ',');
        if (f.size() != names.size())
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(names.size()) + " fields, got " + std::to_string(f.size()));
        auto at = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
        try {
            ResultRow r;
            r.geometry = at("geometry");
            r.kernel = at("kernel");
            r.n = detail::parse_count(at("N"));
            r.epsilon = detail::parse_real(at("epsilon"));
            r.method = at("method");
            r.nnz = detail::parse_count(at("nnz"));
            r.compression = detail::parse_real(at("compression"));
            r.achieved_rel_error = detail::parse_real(at("achieved_rel_error"));
            r.error_mode = at("error_mode");
            r.norm_mu = detail::parse_real(at("norm_mu"));
            r.norm_jsd = detail::parse_real(at("norm_jsd"));
            r.norm_cols = detail::parse_count(at("norm_cols"));
            r.rank_min = detail::parse_count(at("rank_min"));
            r.rank_med = detail::parse_count(at("rank_med"));
            r.rank_max = detail::parse_count(at("rank_max"));
            r.t_tree_ms = detail::parse_real(at("t_tree_ms"));
            r.t_norm_ms = detail::parse_real(at("t_norm_ms"));
            r.t_assemble_ms = detail::parse_real(at("t_assemble_ms"));
            r.t_error_ms = detail::parse_real(at("t_error_ms"));
            r.seed = detail::parse_count(at("seed"));
            rows.push_back(std::move(r));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

struct IfEntry {
    std::string geometry;
    std::string kernel;
    std::size_t n = 0;
    double epsilon = 0.0;
    std::size_t nnz_brem = 0;
    std::size_t nnz_mrem = 0;
    double factor = 0.0;
};

/// Improvement factor nnz(BREM) / nnz(MREM) for every matched pair; unmatched rows are reported to `warn`.
inline std::vector<IfEntry> report_if(const std::vector<ResultRow>& rows, std::ostream* warn = nullptr) {
    using Key = std::tuple<std::string, std::string, std::size_t, double>;
    std::map<Key, const ResultRow*> brem, mrem;
    std::vector<Key> order;
    for (const auto& r : rows) {
        if (r.failed() || (r.method != "BREM" && r.method != "MREM"))
            continue;
        const Key k{r.geometry, r.kernel, r.n, r.epsilon};
        if (!brem.count(k) && !mrem.count(k))
            order.push_back(k);
        (r.method == "BREM" ? brem : mrem)[k] = &r;
    }

    std::vector<IfEntry> out;
    if (mrem.empty() && warn)
        *warn << "warning: no MREM rows, improvement factor table is empty\n";

    for (const auto& k : order) {
        const auto b = brem.find(k);
        const auto m = mrem.find(k);
        if (b == brem.end() || m == mrem.end()) {
            if (warn && !mrem.empty())
                *warn << "warning: unmatched " << (b == brem.end() ? "MREM" : "BREM") << " row for "
                      << std::get<0>(k) << ' ' << std::get<1>(k) << " N=" << std::get<2>(k)
                      << " eps=" << detail::fmt_real(std::get<3>(k)) << ", skipped\n";
            continue;
        }
        out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), b->second->nnz,
                       m->second->nnz, improvement_factor(b->second->nnz, m->second->nnz)});
    }
    return out;
}

inline void write_if_table(const std::vector<IfEntry>& table, std::ostream& out) {
    out << "geometry,kernel,N,epsilon,nnz_brem,nnz_mrem,improvement_factor\n";
    for (const auto& e : table)
        out << e.geometry << ',' << e.kernel << ',' << e.n << ',' << detail::fmt_real(e.epsilon) << ','
            << e.nnz_brem << ',' << e.nnz_mrem << ',' << detail::fmt_real(e.factor) << '\n';
}

namespace detail {

inline void fill_ranks(ResultRow& row, std::vector<std::size_t> ranks) {
    if (ranks.empty())
        return;
    std::sort(ranks.begin(), ranks.end());
    row.rank_min = ranks.front();
    row.rank_med = ranks[(ranks.size() - 1) / 2];
    row.rank_max = ranks.back();
}

// seeds for the independent random streams of one spec point
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return seed * 0x9E3779B97F4A7C15ull + stream;
}

} // namespace detail

/// Runs every (geometry, kernel, N, eps, method) point. Rows go to `csv` as they finish.
/// Returns 0 on success, 1 if any row failed.
inline int run(const ExperimentSpec& spec, std::ostream& csv, std::ostream* log = nullptr,
               std::vector<ResultRow>* rows_out = nullptr) {
    spec.validate();
    csv << csv_header << '\n';
    int status = 0;

    for (const auto geometry : spec.geometries) {
        for (const auto& kernel : spec.kernels) {
            for (const auto n : spec.sizes) {
                if (log && n < 2 * spec.leaf_size)
                    *log << "note: N=" << n << " < 2*leaf_size, partition is a single dense block\n";

                const PointCloud cloud = generate_points(geometry, n, spec.seed);
                const KernelMatrix oracle(cloud, kernel);

                auto t0 = hmtol::detail::clock::now();
                const ClusterTree tree = build_cluster_tree(cloud, spec.leaf_size);
                const BlockPartition partition = build_block_partition(tree, spec.eta);
                const double tree_ms = hmtol::detail::elapsed_ms(t0);

                std::optional<NormEstimate> fro_estimate;
                double fro_ms = 0.0;
                std::optional<double> one_norm;
                double one_ms = 0.0;

                for (const double eps : spec.epsilons) {
                    for (const auto method : spec.methods) {
                        ResultRow row;
                        row.geometry = to_string(geometry);
                        row.kernel = kernel.name();
                        row.n = n;
                        row.epsilon = eps;
                        row.method = to_string(method);
                        row.seed = spec.seed;
                        row.t_tree_ms = tree_ms;
                        row.block_count = partition.blocks.size();
                        row.partition_area = partition.area();

                        try {
                            std::optional<TolerancePolicy> policy;
                            std::optional<NormEstimate> estimate;
                            switch (method) {
                            case Method::BREM:
                                policy = TolerancePolicy::brem(eps, n);
                                break;
                            case Method::MREM:
                                if (!fro_estimate) {
                                    StochasticNormOptions opt;
                                    opt.rel_jsd_tol = spec.norm_jsd_tol;
                                    opt.relative = spec.norm_jsd_relative;
                                    opt.seed = detail::stream_seed(spec.seed, 1);
                                    t0 = hmtol::detail::clock::now();
                                    fro_estimate = estimate_fro_stochastic(oracle, n, opt);
                                    fro_ms = hmtol::detail::elapsed_ms(t0);
                                }
                                estimate = fro_estimate;
                                row.norm_mu = fro_estimate->mu;
                                row.norm_jsd = fro_estimate->jsd;
                                row.norm_cols = fro_estimate->n_samples;
                                row.t_norm_ms = fro_ms;
                                policy = TolerancePolicy::mrem(eps, n, fro_estimate->safe_fro_norm);
                                break;
                            case Method::MREMmax:
                                if (!one_norm) {
                                    t0 = hmtol::detail::clock::now();
                                    one_norm = induced_one_norm(oracle, n);
                                    one_ms = hmtol::detail::elapsed_ms(t0);
                                }
                                row.norm_mu = *one_norm;
                                row.norm_cols = n;
                                row.t_norm_ms = one_ms;
                                policy = TolerancePolicy::mrem_max(eps, n, *one_norm);
                                break;
                            }

                            BuildConfig config{*policy};
                            config.alpha = spec.alpha;
                            config.eta = spec.eta;
                            config.leaf_size = spec.leaf_size;
                            config.seed = spec.seed;
                            config.norm_estimate = estimate;

                            BuildResult result = assemble(oracle, tree, partition, config);
                            row.nnz = result.report.nnz;
                            row.compression = result.report.compression;
                            row.t_assemble_ms = result.report.timings.assemble_ms;
                            detail::fill_ranks(row, result.report.ranks);

                            if (spec.measure_error) {
                                const ErrorMode mode =
                                    n <= spec.exact_error_max_n
                                        ? ErrorMode::exact()
                                        : ErrorMode::sampled(spec.sampled_error_columns, detail::stream_seed(spec.seed, 2));
                                measure(result, oracle, mode);
                                row.achieved_rel_error = result.report.error->rel_fro;
                                row.error_mode = result.report.error->sampled ? "sampled" : "exact";
                                row.t_error_ms = result.report.timings.error_ms;
                            } else {
                                row.error_mode = "none";
                            }
                        } catch (const std::exception& e) {
                            row.error_mode = "failed";
                            row.achieved_rel_error = std::numeric_limits<double>::quiet_NaN();
                            status = 1;
                            if (log)
                                *log << "error: " << row.geometry << ' ' << row.kernel << " N=" << n
                                     << " eps=" << eps << ' ' << row.method << ": " << e.what() << '\n';
                        }

                        csv << to_csv(row) << '\n';
                        csv.flush();
                        if (log)
                            *log << row.geometry << ' ' << row.kernel << " N=" << n << " eps=" << eps << ' '
                                 << row.method << " compression=" << detail::fmt_real(row.compression)
                                 << " error=" << detail::fmt_real(row.achieved_rel_error) << '\n';
                        if (rows_out)
                            rows_out->push_back(std::move(row));
                    }
                }
            }
        }
    }
    return status;
}

} // namespace hmtol::bench

#endif // HMTOL_BENCH_HPP
