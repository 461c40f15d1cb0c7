#ifndef HMTOL_SERIALIZATION_HPP
#define HMTOL_SERIALIZATION_HPP
//
// Binary H-matrix file, format version 1. All integers are little-endian
// uint64 unless noted, reals are IEEE-754 binary64, matrices column-major.
//
//   magic      8 bytes  "HMTOLHM\0"
//   version    uint32   1
//   n          matrix dimension
//   eta        real
//   order      n entries, original index of each permuted position
//   blocks     block count, then per block:
//                row_node, col_node, row_begin, rows, col_begin, cols
//                admissible  uint8
//                storage     uint8   0 = dense, 1 = low rank
//                dense:      rows*cols reals
//                low rank:   rank, then u (rows x rank) and v (cols x rank)
//   report     byte length, then the build report as UTF-8 JSON
//

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hmtol/hmatrix.hpp"

namespace hmtol {

inline constexpr std::array<char, 8> hmatrix_magic{'H', 'M', 'T', 'O', 'L', 'H', 'M', '\0'};
inline constexpr std::uint32_t hmatrix_format_version = 1;

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

inline nlohmann::json report_to_json(const BuildReport& r) {
    nlohmann::json j;
    j["method"] = to_string(r.method);
    j["n"] = r.n;
    j["nnz"] = r.nnz;
    j["compression"] = r.compression;
    j["block_count"] = r.block_count;
    j["dense_blocks"] = r.dense_blocks;
    j["low_rank_blocks"] = r.low_rank_blocks;
    j["fallback_blocks"] = r.fallback_blocks;
    j["partition_area"] = r.partition_area;
    j["ranks"] = r.ranks;
    j["nominal_epsilon"] = r.nominal_epsilon;
    j["effective_epsilon"] = r.effective_epsilon;
    j["matrix_norm"] = r.matrix_norm ? nlohmann::json(*r.matrix_norm) : nlohmann::json(nullptr);
    if (r.error) {
        const auto& e = *r.error;
        j["error"] = {{"mode", e.sampled ? "sampled" : "exact"},
                      {"rel_fro", e.rel_fro},
                      {"abs_fro", e.abs_fro},
                      {"matrix_fro", e.matrix_fro},
                      {"max_abs", e.max_abs},
                      {"rel_jsd", e.rel_jsd},
                      {"columns", e.columns}};
    } else {
        j["error"] = nullptr;
    }
    j["timings_ms"] = {{"tree", r.timings.tree_ms},
                       {"norm", r.timings.norm_ms},
                       {"assemble", r.timings.assemble_ms},
                       {"error", r.timings.error_ms}};
    return j;
}

inline BuildReport report_from_json(const nlohmann::json& j) {
    BuildReport r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.n = j.at("n").get<std::size_t>();
    r.nnz = j.at("nnz").get<std::size_t>();
    r.compression = j.at("compression").get<double>();
    r.block_count = j.at("block_count").get<std::size_t>();
    r.dense_blocks = j.at("dense_blocks").get<std::size_t>();
    r.low_rank_blocks = j.at("low_rank_blocks").get<std::size_t>();
    r.fallback_blocks = j.at("fallback_blocks").get<std::size_t>();
    r.partition_area = j.at("partition_area").get<std::size_t>();
    r.ranks = j.at("ranks").get<std::vector<std::size_t>>();
    r.nominal_epsilon = j.at("nominal_epsilon").get<double>();
    r.effective_epsilon = j.at("effective_epsilon").get<double>();
    if (!j.at("matrix_norm").is_null())
        r.matrix_norm = j.at("matrix_norm").get<double>();
    if (!j.at("error").is_null()) {
        const auto& e = j.at("error");
        ErrorMeasure m;
        m.sampled = e.at("mode").get<std::string>() == "sampled";
        m.rel_fro = e.at("rel_fro").get<double>();
        m.abs_fro = e.at("abs_fro").get<double>();
        m.matrix_fro = e.at("matrix_fro").get<double>();
        m.max_abs = e.at("max_abs").get<double>();
        m.rel_jsd = e.at("rel_jsd").get<double>();
        m.columns = e.at("columns").get<std::size_t>();
        r.error = std::move(m);
    }
    const auto& t = j.at("timings_ms");
    r.timings = {t.at("tree").get<double>(), t.at("norm").get<double>(), t.at("assemble").get<double>(),
                 t.at("error").get<double>()};
    return r;
}

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_u64(std::ostream& out, std::size_t v) { put(out, static_cast<std::uint64_t>(v)); }

inline void put_reals(std::ostream& out, const double* p, std::size_t count) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in)
        throw std::runtime_error("hmatrix file: unexpected end of data");
    return v;
}

inline std::size_t get_u64(std::istream& in) { return static_cast<std::size_t>(get<std::uint64_t>(in)); }

inline void get_reals(std::istream& in, double* p, std::size_t count) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in)
        throw std::runtime_error("hmatrix file: unexpected end of data");
}

} // namespace detail

inline void save(std::ostream& out, const HMatrix& h, const BuildReport& report) {
    out.write(hmatrix_magic.data(), hmatrix_magic.size());
    detail::put(out, hmatrix_format_version);
    detail::put_u64(out, h.size());
    detail::put(out, h.partition().eta);
    for (auto k : h.order())
        detail::put_u64(out, k);

    detail::put_u64(out, h.blocks().size());
    for (std::size_t b = 0; b < h.blocks().size(); ++b) {
        const auto& blk = h.blocks()[b];
        for (auto v : {blk.row_node, blk.col_node, blk.row_begin, blk.rows, blk.col_begin, blk.cols})
            detail::put_u64(out, v);
        detail::put(out, static_cast<std::uint8_t>(blk.admissible));
        if (const auto* lr = std::get_if<LowRankFactors>(&h.data(b))) {
            detail::put(out, std::uint8_t{1});
            detail::put_u64(out, lr->rank());
            detail::put_reals(out, lr->u.data(), static_cast<std::size_t>(lr->u.size()));
            detail::put_reals(out, lr->v.data(), static_cast<std::size_t>(lr->v.size()));
        } else {
            const auto& d = std::get<Matrix>(h.data(b));
            detail::put(out, std::uint8_t{0});
            detail::put_reals(out, d.data(), static_cast<std::size_t>(d.size()));
        }
    }

    const std::string text = report_to_json(report).dump();
    detail::put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw std::runtime_error("hmatrix file: write failed");
}

inline BuildResult load(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != hmatrix_magic)
        throw std::runtime_error("hmatrix file: bad magic");
    const auto version = detail::get<std::uint32_t>(in);
    if (version != hmatrix_format_version)
        throw std::runtime_error("hmatrix file: unsupported version " + std::to_string(version));

    const std::size_t n = detail::get_u64(in);
    BlockPartition partition;
    partition.n = n;
    partition.eta = detail::get<double>(in);

    std::vector<std::size_t> order(n);
    for (auto& k : order)
        k = detail::get_u64(in);

    const std::size_t count = detail::get_u64(in);
    std::vector<BlockData> data;
    for (std::size_t b = 0; b < count; ++b) {
        Block blk;
        blk.row_node = detail::get_u64(in);
        blk.col_node = detail::get_u64(in);
        blk.row_begin = detail::get_u64(in);
        blk.rows = detail::get_u64(in);
        blk.col_begin = detail::get_u64(in);
        blk.cols = detail::get_u64(in);
        blk.admissible = detail::get<std::uint8_t>(in) != 0;
        if (blk.row_begin + blk.rows > n || blk.col_begin + blk.cols > n)
            throw std::runtime_error("hmatrix file: block outside the matrix");

        const auto rows = static_cast<Eigen::Index>(blk.rows);
        const auto cols = static_cast<Eigen::Index>(blk.cols);
        const auto storage = detail::get<std::uint8_t>(in);
        if (storage == 1) {
            const auto rank = static_cast<Eigen::Index>(detail::get_u64(in));
            if (rank > std::min(rows, cols))
                throw std::runtime_error("hmatrix file: rank exceeds block dimensions");
            Matrix u(rows, rank), v(cols, rank);
            detail::get_reals(in, u.data(), static_cast<std::size_t>(u.size()));
            detail::get_reals(in, v.data(), static_cast<std::size_t>(v.size()));
            data.emplace_back(LowRankFactors(std::move(u), std::move(v)));
        } else if (storage == 0) {
            Matrix d(rows, cols);
            detail::get_reals(in, d.data(), static_cast<std::size_t>(d.size()));
            data.emplace_back(std::move(d));
        } else {
            throw std::runtime_error("hmatrix file: unknown block storage tag");
        }
        partition.blocks.push_back(blk);
    }

    const std::size_t len = detail::get_u64(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in)
        throw std::runtime_error("hmatrix file: truncated report");

    BuildReport report;
    try {
        report = report_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("hmatrix file: bad report: ") + e.what());
    }
    return {HMatrix(std::move(order), std::move(partition), std::move(data)), std::move(report)};
}

} // namespace hmtol

#endif // HMTOL_SERIALIZATION_HPP
