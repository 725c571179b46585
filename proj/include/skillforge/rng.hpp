#pragma once

#include <cstdint>

namespace skillforge {

/// Counter-based pseudo-random stream. Each draw is a pure function of its
/// key components, so trials can run in any order (or in parallel) and still
/// reproduce bit-identically. The mixer is the splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Uniform draw in [0, 1) keyed by (seed, trial, ordinal, attempt).
/// The attempt component makes retry draws independent of the first try.
inline double uniform_draw(std::uint64_t seed, std::uint64_t trial,
                           std::uint32_t ordinal, std::uint32_t attempt) {
    std::uint64_t h = mix64(seed ^ 0x5343494C4C464F52ull);
    h = mix64(h ^ trial);
    h = mix64(h ^ ((static_cast<std::uint64_t>(ordinal) << 32) | attempt));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace skillforge
