#pragma once
// Deterministic 64-bit stream used everywhere randomness is needed: fixed
// algorithm, fixed constants, no dependence on platform library internals,
// so seeded runs are byte-stable across machines and thread counts.

#include <cstdint>

namespace recdual {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

struct SplitMix {
    std::uint64_t state = 0;
    explicit SplitMix(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() { return splitmix64_next(state); }
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// independent child stream for a numbered lane (path, instance, ...)
inline SplitMix child_stream(std::uint64_t seed, std::uint64_t lane) {
    std::uint64_t s = seed;
    const std::uint64_t a = splitmix64_next(s);
    std::uint64_t t = a ^ (0xD1B54A32D192ED03ull * (lane + 1));
    return SplitMix(splitmix64_next(t));
}

} // namespace recdual
