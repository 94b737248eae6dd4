#pragma once

// Shrinking target families A_n for the Gauss map. Every family is decided by
// a bounded block of digits: x is in A_n iff a_1 ... a_m satisfies the
// family's predicate, so T^i x is in A_n iff a_{i+1} ... a_{i+m} does.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gmpl/cf.hpp"

namespace gmpl {

/// {a_1 >= floor(theta n) + 1} = (0, 1/(floor(theta n) + 1)).
struct TailSet {
    double theta = 1.0;
};

/// {a_1, ..., a_m >= floor((theta n)^(1/m))}.
struct TupleSet {
    int m = 2;
    double theta = 1.0;
};

/// Cylinder [j, j] with j = floor(n^(num/den)).
struct PatternSet {
    int exponent_num = 1;
    int exponent_den = 4;
};

/// [1, n] union [n, 1].
struct NegControl {};

class TargetFamily {
public:
    using Variant = std::variant<TailSet, TupleSet, PatternSet, NegControl>;

    TargetFamily(Variant v);

    const Variant& variant() const { return v_; }
    /// Digits needed to decide membership.
    std::size_t prefix_length() const;
    /// "tail", "tuple", "pattern" or "negcontrol".
    std::string name() const;
    std::string describe() const;

    /// Digit threshold at n: ⌊θn⌋+1 (tail), ⌊(θn)^{1/m}⌋ (tuple), j (pattern),
    /// n (negcontrol). Throws DomainError when it is below 1.
    Digit threshold(std::uint64_t n) const;

    /// Membership of a block of prefix_length() digits for a precomputed
    /// threshold.
    bool contains(std::span<const Digit> block, Digit threshold) const;

    /// The defining words when A_n is a finite union of cylinders (pattern,
    /// negcontrol); empty for threshold families.
    std::vector<Digits> words(std::uint64_t n) const;

    /// A_n as a finite union of disjoint open intervals, sorted. Throws
    /// DomainError for TupleSet with m >= 2 (a countable union).
    std::vector<RationalInterval> intervals(std::uint64_t n) const;

private:
    Variant v_;
};

/// μ(A_n) in the Gauss measure.
long double target_measure(const TargetFamily& fam, std::uint64_t n);

/// #{0 <= i < n : a_{i+1} ... a_{i+m} in A_n}. Throws NumericError
/// "precision shortfall" if fewer than n - 1 + m digits are supplied.
std::uint64_t hits_in_orbit(std::span<const Digit> digits, const TargetFamily& fam, std::uint64_t n);

/// Same count over n positions with an explicit digit threshold.
std::uint64_t hits_in_orbit(std::span<const Digit> digits, const TargetFamily& fam, std::uint64_t n, Digit threshold);

enum class OverlapMethod { exact, operator_, montecarlo };

const char* to_string(OverlapMethod m);
OverlapMethod parse_overlap_method(const std::string& name);

struct OverlapOptions {
    std::uint64_t trials = 1'000'000;  // montecarlo
    std::uint64_t seed = 1;            // montecarlo
    unsigned threads = 0;              // 0 = default_threads()
    std::size_t grid_size = 8192;      // operator
};

struct OverlapResult {
    long double mass = 0;
    /// exact: floating-point bound; montecarlo: standard error; operator:
    /// change against the half-size grid.
    long double error_bound = 0;
};

/// μ(A_n ∩ T^{-i} A_n) for i >= 1.
///   exact: TailSet and TupleSet while the combined block is at most 3 digits
///          long; PatternSet and NegControl for i <= m (cylinder algebra).
///   operator: Ulam matrix power on a grid adapted to A_n.
///   montecarlo: Gauss-law digit sampling.
OverlapResult overlap_measure(const TargetFamily& fam, std::uint64_t n, std::uint64_t i, OverlapMethod method,
                              const OverlapOptions& opts = {});

/// overlap_measure / target_measure.
long double assumption_b_ratio(const TargetFamily& fam, std::uint64_t n, std::uint64_t i,
                               OverlapMethod method = OverlapMethod::exact, const OverlapOptions& opts = {});

/// μ{a_1, ..., a_k >= N} for k <= 3, closed form.
long double tuple_tail_measure(Digit N, int k);

/// w[0..i) ++ v when the last m - i digits of w equal the first m - i digits
/// of v (both of length m, 1 <= i); empty word otherwise.
Digits overlap_word(std::span<const Digit> w, std::span<const Digit> v, std::size_t i);

}  // namespace gmpl
