#pragma once

#include <cstdint>
#include <random>

namespace coldrec {

// std::uniform_*_distribution output differs between standard libraries, so
// every draw that affects results goes through these helpers on top of the
// fully specified mt19937_64 engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, bound). bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound) {
        // Rejection on the top range keeps the draw exactly uniform.
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent seeds and keyed hashes.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace coldrec
