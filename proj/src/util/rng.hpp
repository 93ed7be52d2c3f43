#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "util/hash.hpp"

namespace taxoeval::util {

// std::mt19937_64 output is fully specified by the standard, the std
// distributions are not; everything below is built on raw engine output so
// that seeded runs agree across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, n). n must be > 0.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Deterministic uniform double in [0, 1) from a (seed, index) pair.
inline double hash_unit(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(index));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace taxoeval::util
