#pragma once

// Monte Carlo visit counts S_n = #{0 <= i < n : T^i x in A_n}, compared with
// Poisson laws. Trial t reads only the streams (seed, t, lane), so results
// are independent of thread count and scheduling.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmpl/cf.hpp"
#include "gmpl/renewal.hpp"
#include "gmpl/targets.hpp"

namespace gmpl {

struct RunOptions {
    std::uint64_t trials = 100'000;
    MeasureLaw law = MeasureLaw::lebesgue;  // gauss system only
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = default_threads()
    int max_doublings = 8;
};

struct HitHistogram {
    std::map<std::uint64_t, std::uint64_t> counts;
    std::uint64_t trials = 0;   // completed trials; equals the sum of counts
    std::uint64_t aborted = 0;  // precision shortfall after the retry cap
    std::uint64_t n = 0;
    double t_hat = 0;  // n μ(A_n)
    std::string law;   // gauss, lebesgue or stationary
    std::uint64_t seed = 0;
};

/// Gauss-map trials: certified digits of a sampled point, then hits_in_orbit.
HitHistogram run_trials(const TargetFamily& fam, std::uint64_t n, const RunOptions& opts);

/// Renewal-chain trials with A = {x_0 >= K}, stationary start.
HitHistogram run_renewal_trials(const RenewalChain& chain, std::size_t K, std::uint64_t n, const RunOptions& opts);

/// t^k e^{-t} / k!, evaluated in log space.
double poisson_pmf(double t, std::uint64_t k);

struct DistributionRow {
    std::uint64_t k = 0;
    std::uint64_t count = 0;
    double empirical = 0;
    double reference = 0;
    double std_err = 0;  // binomial, sqrt(p (1 - p) / trials)
};

struct DistributionReport {
    double tv = 0;
    std::vector<DistributionRow> rows;  // k = 0 .. max observed k
    double reference_tail = 0;          // reference mass beyond the last row
};

/// ½ Σ |empirical - reference| with the reference mass above the largest
/// observed k folded into one tail cell.
DistributionReport tv_distance(const HitHistogram& hist, const std::function<double(std::uint64_t)>& pmf);

struct HitSearch {
    std::optional<std::uint64_t> tau;  // first i >= 1 with T^i x in A
    bool decided = false;              // false: digits ran out before the horizon
};

/// First i in [1, horizon] whose block a_{i+1} .. a_{i+m} lies in A.
HitSearch first_hit(std::span<const Digit> digits, const TargetFamily& fam, Digit threshold, std::uint64_t horizon);

struct HittingSample {
    std::vector<std::uint64_t> tau;  // 0 when censored or aborted
    std::vector<std::uint8_t> status;  // 0 hit, 1 censored, 2 aborted
    double mu_An = 0;
    std::uint64_t horizon = 0;  // ceil(20 / μ(A_n))
    std::uint64_t censored = 0;
    std::uint64_t aborted = 0;
    double ks = 0;  // against Exp(1), uncensored trials
    double mean_scaled = 0;
    double se_scaled = 0;
};

HittingSample first_hit_times(const TargetFamily& fam, std::uint64_t n, const RunOptions& opts);
HittingSample first_hit_times_renewal(const RenewalChain& chain, std::size_t K, const RunOptions& opts);

/// One-sample Kolmogorov-Smirnov distance to Exp(1).
double ks_exponential(std::vector<double> sample);

struct LaplaceEstimate {
    double value = 0;
    double std_err = 0;
};

/// Σ_k (counts_k / trials) e^{-sk}.
LaplaceEstimate empirical_laplace(const HitHistogram& hist, double s);

}  // namespace gmpl
