#pragma once

#include <cstdint>

#include "persuade/rational.hpp"

namespace persuade {

// Counter-based splittable generator: draw i of stream s under seed k is a
// pure hash of (k, s, i), so independent streams can be generated in any
// order (or in parallel) with identical results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(mix(seed ^ mix(stream + kGolden))) {}

    std::uint64_t next_u64() { return mix(base_ + ++counter_ * kGolden); }

    // Exact dyadic uniform draw in [0, 1).
    Rat next_unit() {
        mpq_class q(mpz_class(static_cast<unsigned long>(next_u64())),
                    mpz_class(1) << 64);
        q.canonicalize();
        return q;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t x) {
        x += kGolden;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace persuade
