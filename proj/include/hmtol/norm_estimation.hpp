#ifndef HMTOL_NORM_ESTIMATION_HPP
#define HMTOL_NORM_ESTIMATION_HPP
//
// Estimates of |B|_F that never form B.
//
// Stochastic: sample columns i without replacement, X_i = N sum_j B_ji^2 is
// an unbiased sample of |B|_F^2. mu is the sample mean and its spread is
// measured by the delete-1 jackknife standard deviation (JSD), scaled by the
// finite-population factor (1 - n/N) because columns are drawn without
// replacement. The sample doubles until JSD <= tol * mu.
//
// Coarse: a cheap approximation B~ built to tolerance eps~ satisfies
// |B~|_F <= (1 + eps~) |B|_F, so |B~|_F / (1 + eps~) never overestimates.
//

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hmtol/random.hpp"

namespace hmtol {

struct NormEstimate {
    double mu = 0.0;  ///< estimate of |B|_F^2
    double jsd = 0.0; ///< jackknife standard deviation of mu
    std::size_t n_samples = 0;
    double safe_fro_norm = 0.0; ///< sqrt(max(mu - safety_jsd * jsd, 0)), the value handed to MREM
    bool converged = false;

    double fro_norm() const { return std::sqrt(mu); }
    double relative_jsd() const { return mu > 0.0 ? jsd / mu : 0.0; }
};

struct StochasticNormOptions {
    double rel_jsd_tol = 1.0 / 50.0;
    bool relative = true;     ///< compare JSD against tol * mu (true) or against tol (false)
    double safety_jsd = 2.0;  ///< number of JSDs subtracted from mu
    std::uint64_t seed = 0;
    std::size_t min_cols = 8; ///< first batch, at least 2
    std::size_t max_cols = 0; ///< 0 means N
};

namespace detail {

/// Delete-1 jackknife standard deviation of the sample mean, with finite-population factor.
inline double jackknife_sd(const std::vector<double>& x, double mean, std::size_t population) {
    const std::size_t n = x.size();
    if (n < 2)
        return 0.0;
    double ss = 0.0;
    for (double xi : x)
        ss += (xi - mean) * (xi - mean);
    // sum over i of (mean_(i) - mean)^2 * (n-1)/n  ==  ss / (n (n-1))
    const double var = ss / (static_cast<double>(n) * static_cast<double>(n - 1));
    const double fpc = 1.0 - static_cast<double>(n) / static_cast<double>(population);
    return std::sqrt(std::max(0.0, var * fpc));
}

inline double mean_of(const std::vector<double>& x) {
    double s = 0.0;
    for (double xi : x)
        s += xi;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

} // namespace detail

template <class Oracle>
NormEstimate estimate_fro_stochastic(Oracle&& entry, std::size_t n, const StochasticNormOptions& opt = {}) {
    if (n == 0)
        throw std::invalid_argument("estimate_fro_stochastic: empty matrix");
    if (!(opt.rel_jsd_tol > 0.0))
        throw std::invalid_argument("estimate_fro_stochastic: tolerance must be positive");
    if (opt.min_cols < 2)
        throw std::invalid_argument("estimate_fro_stochastic: min_cols must be at least 2");

    const std::size_t max_cols = std::min(n, opt.max_cols == 0 ? n : opt.max_cols);
    IndexSampler sampler(n, opt.seed);
    std::vector<double> samples;
    samples.reserve(max_cols);

    NormEstimate est;
    std::size_t target = std::min(opt.min_cols, max_cols);

    for (;;) {
        while (samples.size() < target) {
            const std::size_t col = sampler.draw();
            double s = 0.0;
            for (std::size_t row = 0; row < n; ++row) {
                const double b = entry(row, col);
                s += b * b;
            }
            samples.push_back(static_cast<double>(n) * s);
        }

        est.mu = detail::mean_of(samples);
        est.jsd = detail::jackknife_sd(samples, est.mu, n);
        est.n_samples = samples.size();

        const double limit = opt.relative ? opt.rel_jsd_tol * est.mu : opt.rel_jsd_tol;
        if (est.jsd <= limit) {
            est.converged = true;
            break;
        }
        if (samples.size() >= max_cols)
            break;
        target = std::min(max_cols, 2 * samples.size());
    }

    est.safe_fro_norm = std::sqrt(std::max(est.mu - opt.safety_jsd * est.jsd, 0.0));
    return est;
}

/// (1 + eps~)^-1 |B~|_F given the Frobenius norm of a coarse approximation.
inline double estimate_fro_via_coarse(double coarse_fro_norm, double eps_tilde) {
    if (eps_tilde < 0.0)
        throw std::invalid_argument("estimate_fro_via_coarse: negative tolerance");
    return coarse_fro_norm / (1.0 + eps_tilde);
}

/// Same, taking any representation with a fro_norm() found by lookup (e.g. HMatrix).
template <class Approximation>
    requires requires(const Approximation& a) { { fro_norm(a) } -> std::convertible_to<double>; }
double estimate_fro_via_coarse(const Approximation& coarse, double eps_tilde) {
    return estimate_fro_via_coarse(static_cast<double>(fro_norm(coarse)), eps_tilde);
}

/// Induced 1-norm max_j sum_i |B_ij| by an exact column sweep.
template <class Oracle>
double induced_one_norm(Oracle&& entry, std::size_t n) {
    if (n == 0)
        throw std::invalid_argument("induced_one_norm: empty matrix");
    double best = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
        double s = 0.0;
        for (std::size_t row = 0; row < n; ++row)
            s += std::abs(entry(row, col));
        best = std::max(best, s);
    }
    return best;
}

} // namespace hmtol

#endif // HMTOL_NORM_ESTIMATION_HPP
