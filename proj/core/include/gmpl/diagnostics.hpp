#pragma once

// Exhaustive exact-arithmetic checks of the structural bounds for the Gauss
// map: distortion of inverse branches (Renyi constant M) and short returns of
// cylinders (constant M_1).

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "gmpl/cf.hpp"

namespace gmpl {

/// v'_a(x) for the inverse branch v_a(x) = (p_n + x p_{n-1}) / (q_n + x q_{n-1}).
/// lebesgue: 1/(q_n + x q_{n-1})^2. gauss: the lebesgue value times
/// h(v_a(x)) / h(x) with h the Gauss density.
long double branch_derivative(std::span<const Digit> word, const mpq_class& x, MeasureLaw law);

/// v_a(x) exactly.
mpq_class inverse_branch(std::span<const Digit> word, const mpq_class& x);

struct ReturnBoundReport {
    std::size_t max_len = 0;
    Digit max_digit = 0;
    double worst_ratio = 0;
    Digits worst_word;
    std::uint64_t worst_k = 0;  // short returns: the return time; Renyi: sample index
    double min_ratio = 0;       // Renyi only
    Digits min_word;
    double constant = 0;  // M or M_1
    std::uint64_t evaluated = 0;
    std::uint64_t mismatches = 0;  // short returns: disagreements with the geometric oracle
};

/// Over all words of length <= max_len with digits <= max_digit and
/// x = j/(samples-1), j = 0..samples-1, the range of v'_a(x)/μ(a) (gauss
/// law). M = max(max ratio, 1/min ratio). Ties keep the first word in
/// (length, lexicographic) order.
ReturnBoundReport renyi_report(std::size_t max_len, Digit max_digit, std::size_t samples_per_cylinder,
                               unsigned threads = 0);

/// word[0..k) ++ word when word[k..n) == word[0..n-k); empty otherwise.
/// Throws DomainError unless 1 <= k <= len(word).
Digits cylinder_self_overlap(std::span<const Digit> word, std::size_t k);

/// a ∩ T^{-k} a computed geometrically: intersect the cylinder of the shifted
/// word with the cylinder of a, then pull back through v_{a_1..a_k}.
std::optional<RationalInterval> geometric_self_overlap(std::span<const Digit> word, std::size_t k);

/// Worst μ(a ∩ T^{-k} a) / μ(a)^{1 + 1/(1+n)} over words of length
/// n <= max_len with digits <= max_digit and 1 <= k <= n. Every overlap word
/// is checked against geometric_self_overlap.
ReturnBoundReport short_return_report(std::size_t max_len, Digit max_digit, unsigned threads = 0);

/// Words of length `len` over {1..max_digit} in lexicographic order.
Digits word_at(std::uint64_t index, std::size_t len, Digit max_digit);

}  // namespace gmpl
