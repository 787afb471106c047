#pragma once

#include <cstdint>
#include <random>

namespace sacv {

/// splitmix64 step; the de-facto standard seed scrambler.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derive an independent child seed from a master seed and a lane index.
/// Seeds are bound to the lane, not to execution order, so parallel jobs
/// reproduce the same streams regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t lane) {
    return splitmix64(master ^ splitmix64(lane + 1));
}

/// Derive a seed from a master seed and two coordinates.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(master, a), b);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

} // namespace sacv
