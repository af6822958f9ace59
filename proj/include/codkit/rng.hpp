#pragma once

#include <cstdint>

namespace codkit {

/// splitmix64 generator. Chosen over std::mt19937 + distributions because the
/// stream must be identical across compilers for committed goldens.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// +1 or -1 with equal probability.
    float rademacher() { return (next_u64() & 1u) ? 1.0f : -1.0f; }

    /// Derive an independent stream, stable in (seed, tag).
    static Rng derive(std::uint64_t seed, std::uint64_t tag) {
        Rng mix(seed ^ (0xd1342543de82ef95ULL * (tag + 1)));
        mix.next_u64();
        return mix;
    }

private:
    std::uint64_t state_;
};

}  // namespace codkit
