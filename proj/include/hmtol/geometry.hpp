#ifndef HMTOL_GEOMETRY_HPP
#define HMTOL_GEOMETRY_HPP
//
// Particle distributions on the cube [-1,1]^3 and radial interaction kernels.
//

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmtol/random.hpp"

namespace hmtol {

using Point = std::array<double, 3>;

enum class Geometry { Cube, Surf, Edge };

inline std::string to_string(Geometry g) {
    switch (g) {
    case Geometry::Cube: return "cube";
    case Geometry::Surf: return "surf";
    case Geometry::Edge: return "edge";
    }
    return "?";
}

inline Geometry parse_geometry(std::string_view s) {
    if (s == "cube") return Geometry::Cube;
    if (s == "surf") return Geometry::Surf;
    if (s == "edge") return Geometry::Edge;
    throw std::invalid_argument("unknown geometry '" + std::string(s) + "'");
}

inline double squared_distance(const Point& a, const Point& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

//
// Immutable set of particles together with the recipe that produced it.
//
class PointCloud {
  public:
    PointCloud(Geometry geometry, std::uint64_t seed, std::vector<Point> points)
        : geometry_(geometry), seed_(seed), points_(std::move(points)) {}

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<Point>& points() const { return points_; }
    Geometry geometry() const { return geometry_; }
    std::uint64_t seed() const { return seed_; }

  private:
    Geometry geometry_;
    std::uint64_t seed_;
    std::vector<Point> points_;
};

//
// Cube: each coordinate uniform on [-1,1].
// Surf: one of the 6 faces uniformly, then uniform on that face.
// Edge: one of the 12 edges uniformly, then uniform along it.
//
inline PointCloud generate_points(Geometry geometry, std::size_t n, std::uint64_t seed) {
    if (n == 0)
        throw std::invalid_argument("generate_points: n must be at least 1");

    Rng rng(seed);
    std::vector<Point> pts(n);

    for (auto& p : pts) {
        switch (geometry) {
        case Geometry::Cube:
            for (auto& c : p)
                c = rng.uniform(-1.0, 1.0);
            break;

        case Geometry::Surf: {
            const std::size_t face = rng.index(6);
            const std::size_t axis = face / 2;
            for (auto& c : p)
                c = rng.uniform(-1.0, 1.0);
            p[axis] = (face % 2 == 0) ? -1.0 : 1.0;
            break;
        }

        case Geometry::Edge: {
            // edge = 4 * free_axis + corner, corner encodes the signs of the two fixed axes
            const std::size_t edge = rng.index(12);
            const std::size_t free_axis = edge / 4;
            const std::size_t corner = edge % 4;
            const std::size_t a = (free_axis + 1) % 3;
            const std::size_t b = (free_axis + 2) % 3;
            p[free_axis] = rng.uniform(-1.0, 1.0);
            p[a] = (corner & 1u) ? 1.0 : -1.0;
            p[b] = (corner & 2u) ? 1.0 : -1.0;
            break;
        }
        }
    }

    return PointCloud(geometry, seed, std::move(pts));
}

//
// Radial kernel K(r): either 1/r^p or ln r, both defined as 0 at r = 0.
//
class Kernel {
  public:
    enum class Kind { InversePower, Log };

    static Kernel inverse_power(int order) {
        if (order < 1)
            throw std::invalid_argument("inverse power kernel needs order >= 1");
        return Kernel(Kind::InversePower, order);
    }
    static Kernel log() { return Kernel(Kind::Log, 0); }

    /// Accepts "invpow:<p>" or "log".
    static Kernel parse(std::string_view s) {
        if (s == "log")
            return log();
        constexpr std::string_view prefix = "invpow:";
        if (s.substr(0, prefix.size()) == prefix) {
            const std::string digits(s.substr(prefix.size()));
            std::size_t used = 0;
            int p = 0;
            try {
                p = std::stoi(digits, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != digits.size())
                throw std::invalid_argument("bad kernel order in '" + std::string(s) + "'");
            return inverse_power(p);
        }
        throw std::invalid_argument("unknown kernel '" + std::string(s) + "'");
    }

    Kind kind() const { return kind_; }
    int order() const { return order_; }

    std::string name() const {
        return kind_ == Kind::Log ? std::string("log") : "invpow:" + std::to_string(order_);
    }

    /// K evaluated at distance sqrt(r2).
    double operator()(double r2) const {
        if (r2 == 0.0)
            return 0.0;
        if (kind_ == Kind::Log)
            return 0.5 * std::log(r2);
        switch (order_) {
        case 1: return 1.0 / std::sqrt(r2);
        case 2: return 1.0 / r2;
        case 3: return 1.0 / (r2 * std::sqrt(r2));
        default: return std::pow(r2, -0.5 * order_);
        }
    }

    friend bool operator==(const Kernel&, const Kernel&) = default;

  private:
    Kernel(Kind kind, int order) : kind_(kind), order_(order) {}

    Kind kind_;
    int order_;
};

/// Entry B(i,j) = K(|x_i - x_j|) of the implicit dense matrix, bounds checked.
inline double entry(const PointCloud& cloud, const Kernel& kernel, std::size_t i, std::size_t j) {
    if (i >= cloud.size() || j >= cloud.size())
        throw std::out_of_range("entry: index out of range");
    return kernel(squared_distance(cloud[i], cloud[j]));
}

//
// Unchecked entry oracle in original particle order. Cheap to copy; holds a
// reference to the cloud, which must outlive it.
//
class KernelMatrix {
  public:
    KernelMatrix(const PointCloud& cloud, Kernel kernel) : cloud_(&cloud), kernel_(kernel) {}

    std::size_t size() const { return cloud_->size(); }
    const PointCloud& cloud() const { return *cloud_; }
    const Kernel& kernel() const { return kernel_; }

    double operator()(std::size_t i, std::size_t j) const {
        return kernel_(squared_distance((*cloud_)[i], (*cloud_)[j]));
    }

  private:
    const PointCloud* cloud_;
    Kernel kernel_;
};

} // namespace hmtol

#endif // HMTOL_GEOMETRY_HPP
