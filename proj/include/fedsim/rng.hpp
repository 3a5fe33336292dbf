#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace fedsim {

// Deterministic randomness for the whole simulator.
//
// The engine is std::mt19937_64, whose output sequence is pinned by the
// standard, and every distribution on top of it is implemented here rather
// than taken from <random>, because the standard leaves distribution
// algorithms unspecified. Identical seeds therefore produce identical draws
// on any conforming toolchain.

// splitmix64 finalizer; used to mix seed components into stream keys.
std::uint64_t mix64(std::uint64_t x);

// Collapses (seed, tag, indices...) into a single engine seed. Each component
// is mixed before combination so that nearby indices give unrelated streams.
std::uint64_t seed_combine(std::initializer_list<std::uint64_t> parts);

// Stream tags keep independent uses of the global seed from colliding.
namespace stream {
inline constexpr std::uint64_t kInitParams = 1;
inline constexpr std::uint64_t kBlobs = 2;
inline constexpr std::uint64_t kQuadFamily = 3;
inline constexpr std::uint64_t kDirichlet = 4;
inline constexpr std::uint64_t kPathological = 5;
inline constexpr std::uint64_t kBatchStream = 6;
inline constexpr std::uint64_t kClientSampling = 7;
inline constexpr std::uint64_t kSurfaceDirections = 8;
inline constexpr std::uint64_t kFiniteDiffProbe = 9;
}  // namespace stream

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0, 1).
    double uniform();
    // Uniform on (0, 1]; never zero, safe under log().
    double uniform_pos();
    // Standard normal via Box-Muller on uniform_pos/uniform.
    double gaussian();
    // Uniform integer in [0, n); n must be positive.
    int uniform_int(int n);

    std::vector<double> gaussian_vector(std::size_t n);

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), in draw order.
    std::vector<int> sample_without_replacement(int n, int k);

    // Gamma(alpha, 1) via Marsaglia-Tsang, boosted for alpha < 1.
    double gamma(double alpha);

    // Dirichlet(alpha, ..., alpha) over k categories.
    std::vector<double> dirichlet(double alpha, int k);

private:
    std::mt19937_64 eng_;
};

}  // namespace fedsim
