#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace factfin {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Fixed across platforms so
// that seeded outputs are bit-identical everywhere.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derive the i-th child seed of a master seed. Children are independent
// splitmix streams, so scenario generation can parallelize without shared
// RNG state.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 1));
}

// Counter-based generator: output i is splitmix64(seed + i). Stateless apart
// from the counter, cheap to fork, reproducible.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return splitmix64(seed_ + counter_++); }

    // Uniform in (0, 1); never returns 0 or 1 so log() below is safe.
    double next_uniform() {
        const std::uint64_t u = next_u64() >> 11; // 53 bits
        return (static_cast<double>(u) + 0.5) * 0x1p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    // Box-Muller; consumes two uniforms per normal (the cosine branch only,
    // so the draw count per normal is fixed).
    double next_normal() {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

// FNV-1a 64-bit, used for content hashes (strategy ids, file manifests).
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace factfin
