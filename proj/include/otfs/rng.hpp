#pragma once

#include <cstdint>
#include <random>

namespace otfs {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; bijective, so distinct inputs give distinct seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent named substream of a trial seed (channel, bits, noise, ...).
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng{mix_seed(seed ^ mix_seed(stream + 0x632BE59BD9B4E019ULL))};
}

}  // namespace otfs
