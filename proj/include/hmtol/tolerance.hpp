#ifndef HMTOL_TOLERANCE_HPP
#define HMTOL_TOLERANCE_HPP
//
// Mapping of a matrix-wide relative tolerance to per-block error budgets.
//
//   BREM     block i must satisfy |E_i|_F   <= eps |B_i|_F
//   MREM     block i must satisfy |E_i|_F   <= eps sqrt(m_i n_i) / N |B|_F
//   MREMmax  block i must satisfy |E_i|_max <= eps / N |B|_1
//
// Both Frobenius variants imply |E|_F <= eps |B|_F for the whole matrix;
// MREMmax implies the element-wise bound |E|_max <= eps / N |B|_1.
//

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hmtol {

enum class Method { BREM, MREM, MREMmax };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::BREM: return "BREM";
    case Method::MREM: return "MREM";
    case Method::MREMmax: return "MREMmax";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    if (s == "BREM" || s == "brem") return Method::BREM;
    if (s == "MREM" || s == "mrem") return Method::MREM;
    if (s == "MREMmax" || s == "mremmax" || s == "MREMMAX") return Method::MREMmax;
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

class TolerancePolicy {
  public:
    /// matrix_norm is |B|_F for MREM and the induced 1-norm |B|_1 for MREMmax.
    /// It may be left empty and supplied later through with_norm().
    TolerancePolicy(Method method, double epsilon, std::size_t n,
                    std::optional<double> matrix_norm = std::nullopt)
        : method_(method), epsilon_(epsilon), n_(n), matrix_norm_(matrix_norm) {
        if (!(epsilon > 0.0))
            throw std::invalid_argument("tolerance must be positive");
        if (n == 0)
            throw std::invalid_argument("matrix dimension must be positive");
        if (matrix_norm) {
            if (method == Method::BREM)
                throw std::invalid_argument("BREM takes no matrix norm");
            if (!(*matrix_norm > 0.0) || !std::isfinite(*matrix_norm))
                throw std::invalid_argument("matrix norm must be positive and finite");
        }
    }

    static TolerancePolicy brem(double epsilon, std::size_t n) {
        return TolerancePolicy(Method::BREM, epsilon, n);
    }
    static TolerancePolicy mrem(double epsilon, std::size_t n, double fro_norm) {
        return TolerancePolicy(Method::MREM, epsilon, n, fro_norm);
    }
    static TolerancePolicy mrem_max(double epsilon, std::size_t n, double one_norm) {
        return TolerancePolicy(Method::MREMmax, epsilon, n, one_norm);
    }

    TolerancePolicy with_norm(double matrix_norm) const {
        return TolerancePolicy(method_, epsilon_, n_, matrix_norm);
    }

    Method method() const { return method_; }
    double epsilon() const { return epsilon_; }
    std::size_t size() const { return n_; }
    const std::optional<double>& matrix_norm() const { return matrix_norm_; }

    /// Element-wise tolerance eps / N * |B|_1 (MREMmax only).
    double max_norm_tolerance() const {
        require_norm();
        return epsilon_ / static_cast<double>(n_) * *matrix_norm_;
    }

    void require_norm() const {
        if (method_ != Method::BREM && !matrix_norm_)
            throw std::invalid_argument(to_string(method_) + " policy is missing the matrix norm");
    }

  private:
    Method method_;
    double epsilon_;
    std::size_t n_;
    std::optional<double> matrix_norm_;
};

enum class BudgetKind { RelativeFro, AbsoluteFro, AbsoluteMax };

struct BlockBudget {
    BudgetKind kind;
    double value;
};

inline BlockBudget block_budget(const TolerancePolicy& policy, std::size_t m, std::size_t n) {
    if (m == 0 || n == 0)
        throw std::invalid_argument("block_budget: empty block");
    policy.require_norm();

    switch (policy.method()) {
    case Method::BREM:
        return {BudgetKind::RelativeFro, policy.epsilon()};
    case Method::MREM:
        return {BudgetKind::AbsoluteFro,
                policy.epsilon() * std::sqrt(static_cast<double>(m) * static_cast<double>(n)) /
                    static_cast<double>(policy.size()) * *policy.matrix_norm()};
    case Method::MREMmax:
        return {BudgetKind::AbsoluteMax, policy.max_norm_tolerance()};
    }
    throw std::logic_error("block_budget: unknown method");
}

/// Frobenius norm squared per element.
inline double fnpe(double fro_norm_sq, std::size_t m, std::size_t n) {
    return fro_norm_sq / (static_cast<double>(m) * static_cast<double>(n));
}

struct BlockError {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double fro_error = 0.0;
};

struct BoundReport {
    bool satisfied = false;
    double error = 0.0;     ///< |E|_F assembled from the block errors
    double requested = 0.0; ///< eps |B|_F
    double ratio = 0.0;     ///< error / requested
    bool sampled = false;   ///< block errors came from a sampled estimate
};

inline BoundReport verify_global_bound(std::span<const BlockError> block_errors,
                                       const TolerancePolicy& policy, double true_fro_norm,
                                       bool sampled = false) {
    double sum = 0.0;
    for (const auto& b : block_errors)
        sum += b.fro_error * b.fro_error;

    BoundReport r;
    r.error = std::sqrt(sum);
    r.requested = policy.epsilon() * true_fro_norm;
    r.ratio = r.requested > 0.0 ? r.error / r.requested : (r.error > 0.0 ? INFINITY : 0.0);
    r.satisfied = r.error <= r.requested;
    r.sampled = sampled;
    return r;
}

} // namespace hmtol

#endif // HMTOL_TOLERANCE_HPP
