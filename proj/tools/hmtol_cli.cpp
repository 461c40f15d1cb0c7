// Command-line driver for H-matrix tolerance-mapping experiments.
//
//   hmtol run        sweep geometries/kernels/sizes/tolerances/methods, write CSV
//   hmtol report-if  improvement-factor table from a result CSV
//   hmtol build      build one H-matrix, optionally save it
//   hmtol inspect    print the report stored in a saved H-matrix

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hmtol/hmtol.hpp"

namespace {

constexpr int exit_usage = 2;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto& part : hmtol::bench::detail::split(s, ','))
        if (auto t = hmtol::bench::detail::trim(part); !t.empty())
            out.push_back(t);
    return out;
}

struct RunArgs {
    std::string geometry = "cube,surf,edge";
    std::string kernel = "invpow:1,invpow:2,invpow:3,log";
    std::string n = "2^9..2^13";
    std::string eps = "1e-5";
    std::string methods = "BREM,MREM";
    std::uint64_t seed = 1;
    double eta = 2.0;
    std::size_t leaf_size = 32;
    std::size_t exact_error_max_n = 8192;
    std::size_t sampled_error_cols = 256;
    double norm_jsd_tol = 1.0 / 50.0;
    bool norm_jsd_absolute = false;
    bool no_error = false;
    bool quiet = false;
    std::string out;
};

hmtol::bench::ExperimentSpec make_spec(const RunArgs& a) {
    hmtol::bench::ExperimentSpec spec;
    spec.geometries.clear();
    for (const auto& g : split_list(a.geometry))
        spec.geometries.push_back(hmtol::parse_geometry(g));
    spec.kernels.clear();
    for (const auto& k : split_list(a.kernel))
        spec.kernels.push_back(hmtol::Kernel::parse(k));
    spec.methods.clear();
    for (const auto& m : split_list(a.methods))
        spec.methods.push_back(hmtol::parse_method(m));
    spec.sizes = hmtol::bench::parse_sizes(a.n);
    spec.epsilons = hmtol::bench::parse_epsilons(a.eps);
    spec.seed = a.seed;
    spec.eta = a.eta;
    spec.leaf_size = a.leaf_size;
    spec.exact_error_max_n = a.exact_error_max_n;
    spec.sampled_error_columns = a.sampled_error_cols;
    spec.norm_jsd_tol = a.norm_jsd_tol;
    spec.norm_jsd_relative = !a.norm_jsd_absolute;
    spec.measure_error = !a.no_error;
    spec.validate();
    return spec;
}

int cmd_run(const RunArgs& a) {
    const auto spec = make_spec(a);
    std::ostream* log = a.quiet ? nullptr : &std::cerr;
    if (a.out.empty() || a.out == "-")
        return hmtol::bench::run(spec, std::cout, log);
    std::ofstream file(a.out);
    if (!file)
        throw std::runtime_error("cannot open '" + a.out + "' for writing");
    return hmtol::bench::run(spec, file, log);
}

int cmd_report_if(const std::string& csv_path, const std::string& out_path) {
    std::ifstream in(csv_path);
    if (!in)
        throw std::runtime_error("cannot open '" + csv_path + "'");
    const auto rows = hmtol::bench::read_csv(in);
    const auto table = hmtol::bench::report_if(rows, &std::cerr);
    if (out_path.empty() || out_path == "-") {
        hmtol::bench::write_if_table(table, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out)
            throw std::runtime_error("cannot open '" + out_path + "' for writing");
        hmtol::bench::write_if_table(table, out);
    }
    return 0;
}

struct BuildArgs {
    std::string geometry = "surf";
    std::string kernel = "invpow:2";
    std::size_t n = 2048;
    double eps = 1e-5;
    std::string method = "MREM";
    std::uint64_t seed = 1;
    double eta = 2.0;
    std::size_t leaf_size = 32;
    bool measure = false;
    std::string save;
};

int cmd_build(const BuildArgs& a) {
    using namespace hmtol;
    const auto cloud = generate_points(parse_geometry(a.geometry), a.n, a.seed);
    const auto kernel = Kernel::parse(a.kernel);
    const KernelMatrix oracle(cloud, kernel);
    const auto method = parse_method(a.method);

    std::optional<NormEstimate> estimate;
    std::optional<TolerancePolicy> policy;
    double norm_ms = 0.0;
    const auto t0 = hmtol::detail::clock::now();
    switch (method) {
    case Method::BREM:
        policy = TolerancePolicy::brem(a.eps, a.n);
        break;
    case Method::MREM: {
        StochasticNormOptions opt;
        opt.seed = bench::detail::stream_seed(a.seed, 1);
        estimate = estimate_fro_stochastic(oracle, a.n, opt);
        policy = TolerancePolicy::mrem(a.eps, a.n, estimate->safe_fro_norm);
        break;
    }
    case Method::MREMmax:
        policy = TolerancePolicy::mrem_max(a.eps, a.n, induced_one_norm(oracle, a.n));
        break;
    }
    norm_ms = hmtol::detail::elapsed_ms(t0);

    BuildConfig config{*policy};
    config.eta = a.eta;
    config.leaf_size = a.leaf_size;
    config.seed = a.seed;
    config.norm_estimate = estimate;

    BuildResult result = assemble(cloud, kernel, config);
    result.report.timings.norm_ms = norm_ms;
    if (a.measure)
        measure(result, oracle);

    if (!a.save.empty()) {
        std::ofstream out(a.save, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open '" + a.save + "' for writing");
        save(out, result.matrix, result.report);
    }
    std::cout << report_to_json(result.report).dump(2) << '\n';
    return 0;
}

int cmd_inspect(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    const auto loaded = hmtol::load(in);
    auto j = hmtol::report_to_json(loaded.report);
    j["stored_nnz"] = loaded.matrix.nnz();
    j["stored_fro_norm"] = hmtol::fro_norm(loaded.matrix);
    std::cout << j.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"H-matrix construction with BREM / MREM / MREMmax tolerance mapping"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep and write result rows as CSV");
    run_cmd->add_option("--geometry", run.geometry, "Comma list of cube, surf, edge")->capture_default_str();
    run_cmd->add_option("--kernel", run.kernel, "Comma list of invpow:<p> and log")->capture_default_str();
    run_cmd->add_option("--n", run.n, "Problem sizes: comma list (4096,2^13) or range 2^a..2^b")->capture_default_str();
    run_cmd->add_option("--eps", run.eps, "Tolerances: comma list or decade range 1e-2..1e-8")->capture_default_str();
    run_cmd->add_option("--methods", run.methods, "Comma list of BREM, MREM, MREMmax")->capture_default_str();
    run_cmd->add_option("--seed", run.seed, "Seed for point generation and sampling")->capture_default_str();
    run_cmd->add_option("--eta", run.eta, "Admissibility parameter")->capture_default_str();
    run_cmd->add_option("--leaf-size", run.leaf_size, "Cluster tree leaf size")->capture_default_str();
    run_cmd->add_option("--exact-error-max-n", run.exact_error_max_n,
                        "Largest N measured by an exact error sweep; larger N are sampled")
        ->capture_default_str();
    run_cmd->add_option("--sampled-error-cols", run.sampled_error_cols, "Columns used by the sampled error estimate")
        ->capture_default_str();
    run_cmd->add_option("--norm-jsd-tol", run.norm_jsd_tol, "Stopping tolerance on the norm estimate JSD")
        ->capture_default_str();
    run_cmd->add_flag("--norm-jsd-absolute", run.norm_jsd_absolute,
                      "Compare the JSD against the tolerance directly instead of relative to the estimate");
    run_cmd->add_flag("--no-error", run.no_error, "Skip the achieved-error measurement");
    run_cmd->add_flag("--quiet", run.quiet, "No progress log on stderr");
    run_cmd->add_option("--out", run.out, "Output CSV path (default stdout)");

    std::string if_csv, if_out;
    auto* if_cmd = app.add_subcommand("report-if", "Improvement factor nnz(BREM)/nnz(MREM) per matched pair");
    if_cmd->add_option("--csv", if_csv, "Result CSV written by 'run'")->required();
    if_cmd->add_option("--out", if_out, "Output CSV path (default stdout)");

    BuildArgs build;
    auto* build_cmd = app.add_subcommand("build", "Build one H-matrix and print its report as JSON");
    build_cmd->add_option("--geometry", build.geometry, "cube, surf or edge")->capture_default_str();
    build_cmd->add_option("--kernel", build.kernel, "invpow:<p> or log")->capture_default_str();
    build_cmd->add_option("--n", build.n, "Number of particles")->capture_default_str();
    build_cmd->add_option("--eps", build.eps, "Requested relative tolerance")->capture_default_str();
    build_cmd->add_option("--method", build.method, "BREM, MREM or MREMmax")->capture_default_str();
    build_cmd->add_option("--seed", build.seed, "Seed")->capture_default_str();
    build_cmd->add_option("--eta", build.eta, "Admissibility parameter")->capture_default_str();
    build_cmd->add_option("--leaf-size", build.leaf_size, "Cluster tree leaf size")->capture_default_str();
    build_cmd->add_flag("--measure", build.measure, "Measure the achieved error by an exact sweep");
    build_cmd->add_option("--save", build.save, "Write the H-matrix to this file");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print the report stored in a saved H-matrix");
    inspect_cmd->add_option("file", inspect_path, "File written by 'build --save'")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*run_cmd)
            return cmd_run(run);
        if (*if_cmd)
            return cmd_report_if(if_csv, if_out);
        if (*build_cmd)
            return cmd_build(build);
        if (*inspect_cmd)
            return cmd_inspect(inspect_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_usage;
}
