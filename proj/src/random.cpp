#include "va/random.hpp"

#include "va/errors.hpp"

namespace va {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

std::size_t categorical(std::span<const double> weights, double total, Rng& rng) {
    const double threshold = uniform01(rng) * total;
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        cumulative += weights[i];
        last_positive = i;
        if (threshold < cumulative) return i;
    }
    // Rounding can leave threshold == cumulative at the very end.
    return last_positive;
}

void dirichlet(std::span<const double> shape, Rng& rng, std::span<double> out) {
    if (out.size() != shape.size()) throw DimensionError("dirichlet: output size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        std::gamma_distribution<double> gamma(shape[i], 1.0);
        out[i] = gamma(rng);
        total += out[i];
    }
    if (!(total > 0.0)) {
        // Every gamma variate underflowed (tiny shapes); fall back to the
        // largest-shape vertex, which is the limit of the normalized draw.
        std::size_t best = 0;
        for (std::size_t i = 1; i < shape.size(); ++i)
            if (shape[i] > shape[best]) best = i;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = i == best ? 1.0 : 0.0;
        return;
    }
    for (double& v : out) v /= total;
}

}  // namespace va
