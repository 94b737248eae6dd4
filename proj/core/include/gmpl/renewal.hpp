#pragma once

// Renewal Markov shift on states {1, 2, ...}: state 1 jumps to i with
// probability f_i, state k >= 2 steps down to k - 1. Stationary law is
// pi_s = r_{s-1} / sum_k r_k with tails r_k = sum_{i>k} f_i.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gmpl/rng.hpp"

namespace gmpl {

/// Branch probabilities f_i of the renewal state.
struct BranchLaw {
    enum class Kind {
        factorial,  // f_i = c^i / (i! (e^c - 1)); c = 1 is the classic example
        geometric,  // f_i = (1 - p) p^(i-1)
        power,      // f_i = i^(-a) / zeta(a)
        explicit_list,
    };

    Kind kind = Kind::factorial;
    double parameter = 1.0;
    std::vector<double> weights;  // explicit_list only; f_1, f_2, ...

    static BranchLaw factorial(double c = 1.0) { return {Kind::factorial, c, {}}; }
    static BranchLaw geometric(double p) { return {Kind::geometric, p, {}}; }
    static BranchLaw power(double a) { return {Kind::power, a, {}}; }
    static BranchLaw from_weights(std::vector<double> f) { return {Kind::explicit_list, 0.0, std::move(f)}; }

    std::string describe() const;
};

inline constexpr double kRenewalTailBound = 1e-12;

class RenewalChain {
public:
    /// f_i for i = 1..truncation (index 0 holds f_1).
    const std::vector<double>& f() const { return f_; }
    /// r_k for k = 0..truncation.
    const std::vector<double>& r() const { return r_; }
    /// pi_s for s = 1..truncation (index 0 holds pi_1).
    const std::vector<double>& pi() const { return pi_; }

    std::size_t truncation() const { return f_.size(); }
    /// Upper bound on sum_{i > truncation} f_i.
    double tail_mass_bound() const { return tail_bound_; }
    const BranchLaw& law() const { return law_; }

    /// Draws a successor of state 1; states past the truncation are clamped
    /// to the last state and counted in `clamped`.
    std::uint32_t draw_branch(double u, std::uint64_t& clamped) const;
    std::uint32_t draw_stationary(double u, std::uint64_t& clamped) const;

private:
    friend RenewalChain renewal_stationary(const BranchLaw&, std::size_t);

    BranchLaw law_;
    std::vector<double> f_;
    std::vector<double> r_;
    std::vector<double> pi_;
    std::vector<double> f_cdf_;
    std::vector<double> pi_cdf_;
    double tail_bound_ = 0.0;
};

/// Builds the chain, cutting the state space at the first index whose tail
/// mass is below 1e-12 (at most `truncation` states). Throws DomainError
/// "no finite stationary measure" when sum_k r_k diverges, NumericError when
/// the cap is reached before the tail bound is met.
RenewalChain renewal_stationary(const BranchLaw& law, std::size_t truncation = 4096);

/// States x_0, ..., x_{length-1}, starting from pi.
std::vector<std::uint32_t> renewal_sample_path(const RenewalChain& chain, std::size_t length,
                                               RandomStream& rng);

/// sum_{s >= K} pi_s.
double renewal_tail_mass(const RenewalChain& chain, std::size_t K);

/// || pi P - pi ||_1 on the truncated transition matrix.
double stationarity_residual(const RenewalChain& chain);

/// Empirical Gibbs-Markov constant C: max over min of f_i / r_{i-1} across
/// the truncated states.
double gibbs_markov_constant(const RenewalChain& chain);

/// Parameter c of the factorial law for which pi({x_0 >= K}) equals `mass`.
double calibrate_factorial_tail(std::size_t K, double mass);

}  // namespace gmpl
