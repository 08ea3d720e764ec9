#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace krlab {

using Vec = std::vector<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
}

// FNV-1a, used to derive per-stage seeds from a run seed and a stage label.
inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Stable sub-seed derivation; every stage gets an independent stream.
inline uint64_t derive_seed(uint64_t seed, std::string_view stage) {
    return mix64(seed ^ fnv1a(stage));
}

inline uint64_t derive_seed(uint64_t seed, std::string_view stage, uint64_t index) {
    return mix64(derive_seed(seed, stage) + 0x9e3779b97f4a7c15ull * (index + 1));
}

using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(mix64(seed)); }

// Uniform integer in [0, n) without std::uniform_int_distribution, whose
// algorithm is implementation-defined; rejection keeps draws portable.
inline uint64_t rand_below(Rng& rng, uint64_t n) {
    if (n == 0) fail("rand_below: empty range");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

inline double rand_unit(Rng& rng) {
    return (rng() >> 11) * 0x1.0p-53;  // [0,1) with 53 random bits
}

inline double rand_uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * rand_unit(rng);
}

}  // namespace krlab
