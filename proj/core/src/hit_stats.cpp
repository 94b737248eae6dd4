#include "gmpl/hit_stats.hpp"

#include <algorithm>
#include <cmath>

#include "gmpl/errors.hpp"
#include "gmpl/log.hpp"
#include "gmpl/parallel.hpp"

namespace gmpl {

namespace {

constexpr std::uint64_t kAborted = ~std::uint64_t{0};

HitHistogram collect(const std::vector<std::uint64_t>& per_trial) {
    HitHistogram h;
    for (const std::uint64_t c : per_trial) {
        if (c == kAborted) {
            ++h.aborted;
            continue;
        }
        ++h.counts[c];
        ++h.trials;
    }
    return h;
}

void finish_hitting(HittingSample& out) {
    std::vector<double> scaled;
    long double sum = 0, sum2 = 0;
    for (std::size_t t = 0; t < out.tau.size(); ++t) {
        if (out.status[t] == 1) ++out.censored;
        if (out.status[t] == 2) ++out.aborted;
        if (out.status[t] != 0) continue;
        const double x = out.mu_An * static_cast<double>(out.tau[t]);
        scaled.push_back(x);
        sum += x;
        sum2 += static_cast<long double>(x) * x;
    }
    if (scaled.empty()) return;
    const long double m = static_cast<long double>(scaled.size());
    out.mean_scaled = static_cast<double>(sum / m);
    const long double var = std::max(0.0L, sum2 / m - (sum / m) * (sum / m));
    out.se_scaled = static_cast<double>(std::sqrt(var / m));
    out.ks = ks_exponential(std::move(scaled));
}

}  // namespace

HitHistogram run_trials(const TargetFamily& fam, std::uint64_t n, const RunOptions& opts) {
    if (opts.trials < 1) throw DomainError("run_trials: trials must be >= 1");
    const std::size_t needed = n - 1 + fam.prefix_length();
    const Digit th = fam.threshold(n);
    std::vector<std::uint64_t> per_trial(opts.trials);
    parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
        DyadicPoint point(StreamId{opts.seed, t, 0}, opts.law);
        const Digits d = sample_certified_digits(point, needed, opts.max_doublings);
        if (d.size() < needed) {
            per_trial[t] = kAborted;
            return;
        }
        std::uint64_t hits = 0;
        const std::span<const Digit> s(d);
        for (std::uint64_t i = 0; i < n; ++i)
            if (fam.contains(s.subspan(i, fam.prefix_length()), th)) ++hits;
        per_trial[t] = hits;
    });
    HitHistogram h = collect(per_trial);
    h.n = n;
    h.t_hat = static_cast<double>(n) * static_cast<double>(target_measure(fam, n));
    h.law = to_string(opts.law);
    h.seed = opts.seed;
    if (h.aborted > 0) log_warning("run_trials: " + std::to_string(h.aborted) + " trial(s) aborted on precision shortfall");
    return h;
}

HitHistogram run_renewal_trials(const RenewalChain& chain, std::size_t K, std::uint64_t n, const RunOptions& opts) {
    if (opts.trials < 1) throw DomainError("run_renewal_trials: trials must be >= 1");
    if (K < 1) throw DomainError("run_renewal_trials: K must be >= 1");
    std::vector<std::uint64_t> per_trial(opts.trials);
    std::vector<std::uint64_t> clamped(opts.trials, 0);
    parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
        RandomStream rng(StreamId{opts.seed, t, 0});
        std::uint64_t c = 0, hits = 0;
        std::uint32_t state = chain.draw_stationary(rng.next_double(), c);
        for (std::uint64_t i = 0;; ++i) {
            if (state >= K) ++hits;
            if (i + 1 == n) break;
            state = state == 1 ? chain.draw_branch(rng.next_double(), c) : state - 1;
        }
        per_trial[t] = hits;
        clamped[t] = c;
    });
    std::uint64_t total_clamped = 0;
    for (const auto c : clamped) total_clamped += c;
    if (total_clamped > 0)
        log_warning("run_renewal_trials: " + std::to_string(total_clamped) + " draw(s) clamped at truncation");
    HitHistogram h = collect(per_trial);
    h.n = n;
    h.t_hat = static_cast<double>(n) * renewal_tail_mass(chain, K);
    h.law = "stationary";
    h.seed = opts.seed;
    return h;
}

double poisson_pmf(double t, std::uint64_t k) {
    if (!(t > 0.0)) throw DomainError("poisson_pmf: t must be positive");
    const double kk = static_cast<double>(k);
    return std::exp(kk * std::log(t) - t - std::lgamma(kk + 1.0));
}

DistributionReport tv_distance(const HitHistogram& hist, const std::function<double(std::uint64_t)>& pmf) {
    if (hist.trials < 1) throw DomainError("tv_distance: histogram has no trials");
    DistributionReport rep;
    const std::uint64_t kmax = hist.counts.empty() ? 0 : hist.counts.rbegin()->first;
    const double N = static_cast<double>(hist.trials);
    long double diff = 0, ref_sum = 0;
    for (std::uint64_t k = 0; k <= kmax; ++k) {
        DistributionRow row;
        row.k = k;
        const auto it = hist.counts.find(k);
        row.count = it == hist.counts.end() ? 0 : it->second;
        row.empirical = static_cast<double>(row.count) / N;
        row.reference = pmf(k);
        row.std_err = std::sqrt(row.empirical * (1.0 - row.empirical) / N);
        diff += std::abs(static_cast<long double>(row.empirical) - row.reference);
        ref_sum += row.reference;
        rep.rows.push_back(row);
    }
    rep.reference_tail = static_cast<double>(std::max(0.0L, 1.0L - ref_sum));
    rep.tv = static_cast<double>(0.5L * (diff + rep.reference_tail));
    return rep;
}

HitSearch first_hit(std::span<const Digit> digits, const TargetFamily& fam, Digit threshold, std::uint64_t horizon) {
    const std::size_t m = fam.prefix_length();
    for (std::uint64_t i = 1; i <= horizon; ++i) {
        if (digits.size() < i + m) return {std::nullopt, false};
        if (fam.contains(digits.subspan(i, m), threshold)) return {i, true};
    }
    return {std::nullopt, true};
}

HittingSample first_hit_times(const TargetFamily& fam, std::uint64_t n, const RunOptions& opts) {
    if (opts.trials < 1) throw DomainError("first_hit_times: trials must be >= 1");
    HittingSample out;
    out.mu_An = static_cast<double>(target_measure(fam, n));
    out.horizon = static_cast<std::uint64_t>(std::ceil(20.0 / out.mu_An));
    const std::size_t m = fam.prefix_length();
    const Digit th = fam.threshold(n);
    const std::size_t full = out.horizon + m;
    const std::size_t start = std::min<std::size_t>(full, static_cast<std::size_t>(std::ceil(1.0 / out.mu_An)) + m);
    out.tau.assign(opts.trials, 0);
    out.status.assign(opts.trials, 0);
    parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
        DyadicPoint point(StreamId{opts.seed, t, 0}, opts.law);
        for (std::size_t needed = start;; needed = std::min(full, 2 * needed)) {
            const Digits d = sample_certified_digits(point, needed, opts.max_doublings);
            if (d.size() < needed) {
                out.status[t] = 2;
                return;
            }
            const HitSearch hs = first_hit(d, fam, th, out.horizon);
            if (hs.tau) {
                out.tau[t] = *hs.tau;
                return;
            }
            if (hs.decided) {
                out.status[t] = 1;
                return;
            }
        }
    });
    finish_hitting(out);
    return out;
}

HittingSample first_hit_times_renewal(const RenewalChain& chain, std::size_t K, const RunOptions& opts) {
    if (opts.trials < 1) throw DomainError("first_hit_times_renewal: trials must be >= 1");
    HittingSample out;
    out.mu_An = renewal_tail_mass(chain, K);
    out.horizon = static_cast<std::uint64_t>(std::ceil(20.0 / out.mu_An));
    out.tau.assign(opts.trials, 0);
    out.status.assign(opts.trials, 1);
    parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
        RandomStream rng(StreamId{opts.seed, t, 0});
        std::uint64_t c = 0;
        std::uint32_t state = chain.draw_stationary(rng.next_double(), c);
        for (std::uint64_t i = 1; i <= out.horizon; ++i) {
            state = state == 1 ? chain.draw_branch(rng.next_double(), c) : state - 1;
            if (state >= K) {
                out.tau[t] = i;
                out.status[t] = 0;
                return;
            }
        }
    });
    finish_hitting(out);
    return out;
}

double ks_exponential(std::vector<double> sample) {
    if (sample.empty()) throw DomainError("ks_exponential: empty sample");
    std::sort(sample.begin(), sample.end());
    const double N = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = -std::expm1(-sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / N - F, F - static_cast<double>(i) / N});
    }
    return d;
}

LaplaceEstimate empirical_laplace(const HitHistogram& hist, double s) {
    if (!(s >= 0.0)) throw DomainError("empirical_laplace: s must be >= 0");
    if (hist.trials < 1) throw DomainError("empirical_laplace: histogram has no trials");
    if (s == 0.0) return {1.0, 0.0};
    long double m1 = 0, m2 = 0;
    const long double N = static_cast<long double>(hist.trials);
    for (const auto& [k, c] : hist.counts) {
        const long double e = std::exp(-static_cast<long double>(s) * static_cast<long double>(k));
        m1 += c * e;
        m2 += c * e * e;
    }
    m1 /= N;
    m2 /= N;
    const long double var = std::max(0.0L, m2 - m1 * m1);
    return {static_cast<double>(m1), static_cast<double>(std::sqrt(var / N))};
}

}  // namespace gmpl
