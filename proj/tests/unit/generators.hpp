#pragma once

// Small deterministic generators for property tests, driven by the
// library's own counter-based streams.

#include <cstdint>

#include <gmpxx.h>

#include "gmpl/cf.hpp"
#include "gmpl/rng.hpp"

namespace gen {

class Gen {
public:
    explicit Gen(std::uint64_t seed, std::uint32_t lane = 0) : rng_(gmpl::StreamId{seed, 0xfeed, lane}) {}

    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) { return lo + rng_.next_u64() % (hi - lo + 1); }
    double unit() { return rng_.next_double(); }

    gmpl::Digits word(std::size_t min_len, std::size_t max_len, gmpl::Digit max_digit) {
        gmpl::Digits w(uniform(min_len, max_len));
        for (auto& d : w) d = uniform(1, max_digit);
        return w;
    }

    /// p/q in (0, 1) with q <= max_den.
    mpq_class rational(std::uint64_t max_den) {
        const std::uint64_t q = uniform(2, max_den);
        mpq_class r(static_cast<unsigned long>(uniform(1, q - 1)), static_cast<unsigned long>(q));
        r.canonicalize();
        return r;
    }

    /// A point strictly inside (lo, hi).
    mpq_class inside(const mpq_class& lo, const mpq_class& hi) {
        const std::uint64_t k = uniform(1, 999);
        return lo + (hi - lo) * mpq_class(static_cast<unsigned long>(k), 1000UL);
    }

    gmpl::RandomStream& stream() { return rng_; }

private:
    gmpl::RandomStream rng_;
};

}  // namespace gen
