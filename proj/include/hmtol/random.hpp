#ifndef HMTOL_RANDOM_HPP
#define HMTOL_RANDOM_HPP
//
// Portable pseudorandom numbers.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard distributions are implementation-defined, so the
// conversions to reals and bounded integers are done here by hand; results
// are therefore bit-identical across compilers and standard libraries.
//

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace hmtol {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n), by rejection.
    std::size_t index(std::size_t n) {
        const auto range = static_cast<std::uint64_t>(n);
        const auto limit = std::numeric_limits<std::uint64_t>::max() -
                           std::numeric_limits<std::uint64_t>::max() % range;
        std::uint64_t x = engine_();
        while (x >= limit)
            x = engine_();
        return static_cast<std::size_t>(x % range);
    }

    std::uint64_t next() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

//
// Sampling without replacement from 0..n-1. Each call to draw() extends the
// sample by a Fisher-Yates step, so prefixes of the sample are themselves
// uniform samples.
//
class IndexSampler {
  public:
    IndexSampler(std::size_t n, std::uint64_t seed) : pool_(n), rng_(seed) {
        for (std::size_t i = 0; i < n; ++i)
            pool_[i] = i;
    }

    std::size_t drawn() const { return next_; }
    std::size_t population() const { return pool_.size(); }
    bool exhausted() const { return next_ == pool_.size(); }

    std::size_t draw() {
        const std::size_t j = next_ + rng_.index(pool_.size() - next_);
        std::swap(pool_[next_], pool_[j]);
        return pool_[next_++];
    }

  private:
    std::vector<std::size_t> pool_;
    std::size_t next_ = 0;
    Rng rng_;
};

} // namespace hmtol

#endif // HMTOL_RANDOM_HPP
