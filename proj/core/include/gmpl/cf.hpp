#pragma once

// Exact continued-fraction arithmetic for the Gauss map T(x) = {1/x}.
//
// Orbits are represented by partial quotients, never by floating-point
// iteration: the point T^i x lies in a digit-defined set exactly when the
// digit block a_{i+1} ... a_{i+m} satisfies the set's predicate. Digits are
// extracted from exact rational enclosures and certified, i.e. shared by
// every point of the enclosing open interval.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "gmpl/rng.hpp"

namespace gmpl {

using Digit = std::uint64_t;
using Digits = std::vector<Digit>;

/// Partial quotients too large for 64 bits are stored saturated; every
/// threshold predicate in the library treats them as "at least this big".
inline constexpr Digit kSaturatedDigit = std::numeric_limits<Digit>::max();

struct Convergent {
    mpz_class p;
    mpz_class q;
};

/// p_k/q_k for k = 1..len(word). Throws DomainError on an empty word or a
/// zero digit.
std::vector<Convergent> convergents(std::span<const Digit> word);

/// Open interval with exact rational endpoints, 0 <= lo < hi <= 1.
class RationalInterval {
public:
    RationalInterval(mpq_class lo, mpq_class hi);

    const mpq_class& lo() const { return lo_; }
    const mpq_class& hi() const { return hi_; }

    bool contains(const mpq_class& x) const { return lo_ < x && x < hi_; }
    bool operator==(const RationalInterval&) const = default;

private:
    mpq_class lo_;
    mpq_class hi_;
};

enum class MeasureLaw { gauss, lebesgue };

const char* to_string(MeasureLaw law);
MeasureLaw parse_measure_law(const std::string& name);

/// Cylinder {x : x = [word, ...]} as an open interval with endpoints
/// p_n/q_n and (p_n + p_{n-1})/(q_n + q_{n-1}).
RationalInterval cylinder_interval(std::span<const Digit> word);

/// Gauss measure log((1+hi)/(1+lo))/log 2 or Lebesgue length, evaluated at
/// 128-bit working precision from the exact endpoints.
long double interval_measure(const RationalInterval& iv, MeasureLaw law);

/// Gauss measure of (lo, hi) for endpoints given as exact rationals.
long double gauss_measure(const mpq_class& lo, const mpq_class& hi);

/// Canonical finite expansion of num/den (last digit >= 2). Requires
/// 0 < num < den; throws DomainError otherwise or if a partial quotient
/// exceeds 64 bits.
Digits rational_cf(const mpz_class& num, const mpz_class& den);

/// Evaluates [0; a_1, ..., a_k] exactly.
mpq_class evaluate_cf(std::span<const Digit> word);

/// Longest prefix (at most max_count digits) shared by every point of the
/// open interval. Uses 128-bit Lehmer rounds over exact GMP arithmetic.
Digits certified_digits(const RationalInterval& iv, std::size_t max_count);

/// Digit-at-a-time reference for certified_digits; same contract, no
/// acceleration. Kept as the test oracle for the fast path.
Digits certified_digits_exact(const RationalInterval& iv, std::size_t max_count);

/// Certified digits of the dyadic interval (m/2^bits, (m+1)/2^bits).
Digits certified_digits_dyadic(const mpz_class& m, unsigned bits, std::size_t max_count);

/// Width-2^-bits dyadic interval around a point drawn from `law`. Gauss law
/// uses exact rejection sampling: accept/reject is decided from interval
/// bounds on the density and refined while undecided.
RationalInterval sample_dyadic(RandomStream& rng, unsigned bits, MeasureLaw law);

/// A random point of (0, 1) whose binary expansion is drawn lazily from
/// counter-based streams. The same (StreamId, law) always denotes the same
/// point, so asking for more bits only refines the enclosure.
class DyadicPoint {
public:
    DyadicPoint(StreamId id, MeasureLaw law);

    /// Left endpoint numerator m of the width-2^-bits enclosure.
    mpz_class numerator(unsigned bits);
    RationalInterval interval(unsigned bits);
    /// Certified digits of the width-2^-bits enclosure.
    Digits digits(unsigned bits, std::size_t max_count);

private:
    void ensure_words(std::size_t count);

    std::vector<std::uint64_t> words_;  // binary expansion, most significant first
    RandomStream xbits_;
};

/// Samples a point's digits until `needed` are certified, starting at
/// 4*needed + 64 bits and doubling on shortfall up to `max_doublings` times.
/// Returns fewer than `needed` digits only when the cap is exhausted.
Digits sample_certified_digits(DyadicPoint& point, std::size_t needed, int max_doublings = 8);

}  // namespace gmpl
