#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace va {

using Rng = std::mt19937_64;

// Deterministic substream seed: mixes a master seed with a stream tag and an
// index (chain, replicate, death...) through splitmix64 finalizers so that
// nearby inputs give unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(derive_seed(master, stream, index));
}

// Uniform on [0,1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(double p, Rng& rng) {
    return uniform01(rng) < p;
}

// One categorical draw proportional to non-negative weights whose sum is
// `total` (> 0). Returns the lowest index whose cumulative weight exceeds
// the uniform threshold.
std::size_t categorical(std::span<const double> weights, double total, Rng& rng);

inline std::size_t categorical(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    return categorical(weights, total, rng);
}

// Dirichlet(shape) draw via normalized Gamma(shape_n, 1) variates.
void dirichlet(std::span<const double> shape, Rng& rng, std::span<double> out);

inline std::vector<double> dirichlet(std::span<const double> shape, Rng& rng) {
    std::vector<double> out(shape.size());
    dirichlet(shape, rng, out);
    return out;
}

}  // namespace va
