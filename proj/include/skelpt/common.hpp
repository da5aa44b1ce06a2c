#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace skelpt {

using Vec3 = Eigen::Vector3d;

// Point sets are row-major N x 3 so each row maps onto a contiguous xyz triple.
using PointSet = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using PointCloud = PointSet;

// N x M, nonnegative, every column sums to 1.
using WeightMatrix = Eigen::MatrixXd;

uint64_t splitmix64(uint64_t x);

// Collapses (seed, stream id, ...) into a single engine seed.
uint64_t mix_seed(std::initializer_list<uint64_t> parts);

uint64_t fnv1a64(std::string_view s);

// mt19937_64 with explicit uniform/normal mappings so that streams are
// reproducible independent of the standard library's distribution internals.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : engine_(splitmix64(seed)) {}
    explicit RngStream(std::initializer_list<uint64_t> parts) : engine_(mix_seed(parts)) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    uint64_t uniform_index(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Box-Muller; two uniforms consumed per draw.
    double normal(double mean = 0.0, double stddev = 1.0);

    // Fisher-Yates over [0, n)
    std::vector<int> permutation(int n);

private:
    std::mt19937_64 engine_;
};

}  // namespace skelpt
