#pragma once

#include <cstdint>
#include <random>

namespace vecfin {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index (splitmix64 finalizer) so that
/// (seed, i) pairs give statistically unrelated generators.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_seed(seed, stream));
}

double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
double standard_normal(Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace vecfin
