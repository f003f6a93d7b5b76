#pragma once

#include <cmath>
#include <cstdint>

namespace qcrit {

/// Splittable counter-based RNG (splitmix64 core).  Hand-rolled so that
/// streams are reproducible bit-for-bit across platforms and compilers;
/// standard-library distributions make no such guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Independent substream: same seed + distinct stream id gives a
    /// decorrelated generator (used for restarts and sample batches).
    Rng split(std::uint64_t stream) const {
        return Rng(mix(state_ ^ mix(stream + 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box-Muller (no cached spare: keeps the stream
    /// position a pure function of the draw count).
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
};

}  // namespace qcrit
