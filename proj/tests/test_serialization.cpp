#include <sstream>

#include <gtest/gtest.h>

#include "hmtol/serialization.hpp"

using namespace hmtol;

namespace {

BuildResult small_build() {
    const auto c = generate_points(Geometry::Surf, 400, 3);
    const auto k = Kernel::inverse_power(2);
    auto r = assemble(c, k, BuildConfig{TolerancePolicy::mrem(1e-5, 400, 123.0)});
    measure(r, KernelMatrix(c, k));
    return r;
}

} // namespace

TEST(Serialization, RoundTrip) {
    const auto r = small_build();
    std::stringstream buf;
    save(buf, r.matrix, r.report);
    const auto back = load(buf);

    EXPECT_EQ(back.matrix.order(), r.matrix.order());
    ASSERT_EQ(back.matrix.blocks().size(), r.matrix.blocks().size());
    for (std::size_t b = 0; b < r.matrix.blocks().size(); ++b) {
        EXPECT_EQ(back.matrix.is_low_rank(b), r.matrix.is_low_rank(b));
        EXPECT_EQ(back.matrix.block_dense(b), r.matrix.block_dense(b));
        EXPECT_EQ(back.matrix.blocks()[b].admissible, r.matrix.blocks()[b].admissible);
    }
    EXPECT_EQ(back.matrix.nnz(), r.matrix.nnz());
    EXPECT_EQ(back.matrix.partition().eta, r.matrix.partition().eta);

    EXPECT_EQ(back.report.method, Method::MREM);
    EXPECT_EQ(back.report.nnz, r.report.nnz);
    EXPECT_EQ(back.report.ranks, r.report.ranks);
    EXPECT_EQ(back.report.matrix_norm, r.report.matrix_norm);
    ASSERT_TRUE(back.report.error.has_value());
    EXPECT_EQ(back.report.error->rel_fro, r.report.error->rel_fro);

    std::vector<double> x(400, 1.0);
    EXPECT_EQ(mvp(back.matrix, x), mvp(r.matrix, x));
}

TEST(Serialization, ReportJsonRoundTrip) {
    const auto r = small_build();
    const auto j = report_to_json(r.report);
    EXPECT_EQ(j.at("method"), "MREM");
    EXPECT_EQ(report_to_json(report_from_json(j)), j);
}

TEST(Serialization, BadMagic) {
    std::stringstream buf("NOTANHM\0garbage");
    EXPECT_THROW(load(buf), std::runtime_error);
}

TEST(Serialization, Truncated) {
    const auto r = small_build();
    std::stringstream buf;
    save(buf, r.matrix, r.report);
    const std::string full = buf.str();
    for (std::size_t cut : {std::size_t{10}, full.size() / 2, full.size() - 3}) {
        std::stringstream part(full.substr(0, cut));
        EXPECT_THROW(load(part), std::runtime_error) << "cut at " << cut;
    }
}

TEST(Serialization, WrongVersion) {
    const auto r = small_build();
    std::stringstream buf;
    save(buf, r.matrix, r.report);
    std::string bytes = buf.str();
    bytes[8] = 7;
    std::stringstream changed(bytes);
    EXPECT_THROW(load(changed), std::runtime_error);
}
