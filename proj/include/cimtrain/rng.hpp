#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random streams. Every draw is a pure function of a key, so
// results do not depend on evaluation order or thread count.

namespace cimtrain::rng {

inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t k) {
    return mix(h ^ (k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

struct Key {
    std::uint64_t state;

    explicit Key(std::uint64_t seed) : state(mix(seed)) {}

    [[nodiscard]] Key fork(std::uint64_t k) const {
        Key out = *this;
        out.state = combine(state, k);
        return out;
    }
    [[nodiscard]] Key fork(std::uint64_t a, std::uint64_t b) const { return fork(a).fork(b); }
    [[nodiscard]] Key fork(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        return fork(a).fork(b).fork(c);
    }
};

// Uniform in [0, 1).
inline double uniform(const Key& key) {
    return static_cast<double>(mix(key.state) >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]; safe as a log() argument.
inline double uniform_pos(const Key& key) {
    return static_cast<double>((mix(key.state) >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller, one value per key.
inline double gaussian(const Key& key) {
    const double u1 = uniform_pos(key.fork(0));
    const double u2 = uniform(key.fork(1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Uniform integer in [0, n).
inline std::uint64_t below(const Key& key, std::uint64_t n) {
    return mix(key.state) % n;
}

}  // namespace cimtrain::rng
