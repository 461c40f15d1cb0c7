// Builds the same particle matrix with BREM and MREM and compares storage.

#include <cstdio>

#include "hmtol/hmtol.hpp"

int main() {
    using namespace hmtol;

    const std::size_t n = 2048;
    const double eps = 1e-5;
    const PointCloud cloud = generate_points(Geometry::Surf, n, 1);
    const Kernel kernel = Kernel::inverse_power(2);
    const KernelMatrix oracle(cloud, kernel);

    const ClusterTree tree = build_cluster_tree(cloud, 32);
    const BlockPartition partition = build_block_partition(tree, 2.0);

    BuildResult brem = assemble(oracle, tree, partition, BuildConfig{TolerancePolicy::brem(eps, n)});

    StochasticNormOptions opt;
    opt.seed = 7;
    const NormEstimate est = estimate_fro_stochastic(oracle, n, opt);
    BuildConfig mrem_config{TolerancePolicy::mrem(eps, n, est.safe_fro_norm)};
    mrem_config.norm_estimate = est;
    BuildResult mrem = assemble(oracle, tree, partition, mrem_config);

    measure(brem, oracle);
    measure(mrem, oracle);

    std::printf("BREM  compression %6.2f  error %.3e\n", brem.report.compression, brem.report.error->rel_fro);
    std::printf("MREM  compression %6.2f  error %.3e\n", mrem.report.compression, mrem.report.error->rel_fro);
    std::printf("improvement factor %.2f\n", improvement_factor(brem.report, mrem.report));
}
