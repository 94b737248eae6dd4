#include "gmpl/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gmpl/errors.hpp"
#include "gmpl/log.hpp"

namespace gmpl {

namespace {

// Unnormalised log-weights are evaluated far enough past the cutoff that the
// remaining tail is below double resolution.
// `tail_sum` receives an accurate value of sum_{i > cap} f_i, `tail_bound` an
// upper bound for it.
std::vector<double> branch_weights(const BranchLaw& law, std::size_t cap, double& tail_bound, double& tail_sum) {
    std::vector<double> f;
    switch (law.kind) {
    case BranchLaw::Kind::factorial: {
        const double c = law.parameter;
        if (!(c > 0.0)) throw DomainError("factorial branch law needs c > 0");
        const double log_norm = std::log(std::expm1(c));
        // f_i decays super-exponentially; the tail past i is < 2 f_{i+1}
        // once i + 2 > 2c.
        for (std::size_t i = 1;; ++i) {
            const double fi = std::exp(static_cast<double>(i) * std::log(c) -
                                       std::lgamma(static_cast<double>(i) + 1.0) - log_norm);
            f.push_back(fi);
            const double next = fi * c / static_cast<double>(i + 1);
            if (static_cast<double>(i) + 2.0 > 2.0 * c && 2.0 * next < kRenewalTailBound) {
                tail_bound = 2.0 * next;
                tail_sum = 0.0;
                double term = next;
                for (std::size_t j = i + 1; term > 1e-40; ++j) {
                    tail_sum += term;
                    term *= c / static_cast<double>(j + 1);
                }
                break;
            }
            if (f.size() >= cap) throw NumericError("renewal truncation too small for tail bound 1e-12");
        }
        break;
    }
    case BranchLaw::Kind::geometric: {
        const double p = law.parameter;
        if (!(p > 0.0 && p < 1.0)) throw DomainError("geometric branch law needs 0 < p < 1");
        for (std::size_t i = 1;; ++i) {
            f.push_back((1.0 - p) * std::pow(p, static_cast<double>(i - 1)));
            const double tail = std::pow(p, static_cast<double>(i));
            if (tail < kRenewalTailBound) {
                tail_bound = tail;
                tail_sum = tail;
                break;
            }
            if (f.size() >= cap) throw NumericError("renewal truncation too small for tail bound 1e-12");
        }
        break;
    }
    case BranchLaw::Kind::power: {
        const double a = law.parameter;
        if (!(a > 1.0)) throw DomainError("power branch law needs exponent > 1");
        // sum_k r_k = sum_i i f_i, finite iff a > 2
        if (a <= 2.0) throw DomainError("no finite stationary measure");
        const double zeta = std::riemann_zeta(a);
        for (std::size_t i = 1;; ++i) {
            f.push_back(std::pow(static_cast<double>(i), -a) / zeta);
            const double x = static_cast<double>(i);
            const double tail = std::pow(x, 1.0 - a) / ((a - 1.0) * zeta);
            if (tail < kRenewalTailBound) {
                tail_bound = tail;
                // Euler-Maclaurin for sum_{j > i} j^-a.
                tail_sum = tail - std::pow(x, -a) / (2.0 * zeta) + a * std::pow(x, -a - 1.0) / (12.0 * zeta);
                break;
            }
            if (f.size() >= cap) throw NumericError("renewal truncation too small for tail bound 1e-12");
        }
        break;
    }
    case BranchLaw::Kind::explicit_list: {
        if (law.weights.empty()) throw DomainError("explicit branch law needs weights");
        double sum = 0.0;
        for (const double w : law.weights) {
            if (!(w > 0.0)) throw DomainError("branch probabilities must be positive");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw DomainError("branch probabilities must sum to 1");
        if (law.weights.size() > cap) throw NumericError("renewal truncation smaller than explicit support");
        f = law.weights;
        tail_bound = 0.0;
        tail_sum = 0.0;
        break;
    }
    }
    return f;
}

std::uint32_t inverse_cdf(const std::vector<double>& cdf, double u, std::uint64_t& clamped) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) {
        ++clamped;
        return static_cast<std::uint32_t>(cdf.size());
    }
    return static_cast<std::uint32_t>(it - cdf.begin()) + 1;
}

}  // namespace

std::string BranchLaw::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::factorial: os << "factorial(c=" << parameter << ")"; break;
    case Kind::geometric: os << "geometric(p=" << parameter << ")"; break;
    case Kind::power: os << "power(a=" << parameter << ")"; break;
    case Kind::explicit_list: os << "explicit(" << weights.size() << " states)"; break;
    }
    return os.str();
}

std::uint32_t RenewalChain::draw_branch(double u, std::uint64_t& clamped) const {
    return inverse_cdf(f_cdf_, u, clamped);
}

std::uint32_t RenewalChain::draw_stationary(double u, std::uint64_t& clamped) const {
    return inverse_cdf(pi_cdf_, u, clamped);
}

RenewalChain renewal_stationary(const BranchLaw& law, std::size_t truncation) {
    if (truncation < 2) throw DomainError("renewal truncation must be >= 2");
    RenewalChain chain;
    chain.law_ = law;
    double tail_sum = 0.0;
    chain.f_ = branch_weights(law, truncation, chain.tail_bound_, tail_sum);
    const std::size_t states = chain.f_.size();

    // r_k summed from the far end, seeded with the tail beyond the cutoff.
    chain.r_.assign(states + 1, 0.0);
    chain.r_[states] = tail_sum;
    for (std::size_t k = states; k-- > 0;) chain.r_[k] = chain.r_[k + 1] + chain.f_[k];
    // Normalise so that r_0 = 1 exactly.
    const double total = chain.r_[0];
    for (double& f : chain.f_) f /= total;
    for (double& r : chain.r_) r /= total;

    double mean = 0.0;  // sum_{k >= 0} r_k
    for (std::size_t k = states + 1; k-- > 0;) mean += chain.r_[k];
    chain.pi_.resize(states);
    for (std::size_t s = 0; s < states; ++s) chain.pi_[s] = chain.r_[s] / mean;

    chain.f_cdf_.resize(states);
    chain.pi_cdf_.resize(states);
    double cf = 0.0, cp = 0.0;
    for (std::size_t s = 0; s < states; ++s) {
        cf += chain.f_[s];
        cp += chain.pi_[s];
        chain.f_cdf_[s] = cf;
        chain.pi_cdf_[s] = cp;
    }
    return chain;
}

std::vector<std::uint32_t> renewal_sample_path(const RenewalChain& chain, std::size_t length,
                                               RandomStream& rng) {
    if (length == 0) throw DomainError("renewal_sample_path: length must be >= 1");
    std::vector<std::uint32_t> path;
    path.reserve(length);
    std::uint64_t clamped = 0;
    std::uint32_t state = chain.draw_stationary(rng.next_double(), clamped);
    path.push_back(state);
    while (path.size() < length) {
        state = state == 1 ? chain.draw_branch(rng.next_double(), clamped) : state - 1;
        path.push_back(state);
    }
    if (clamped > 0)
        log_warning("renewal path: " + std::to_string(clamped) + " draw(s) clamped at truncation " +
                    std::to_string(chain.truncation()));
    return path;
}

double renewal_tail_mass(const RenewalChain& chain, std::size_t K) {
    if (K < 1) throw DomainError("renewal_tail_mass: K must be >= 1");
    if (K == 1) return 1.0;
    double sum = 0.0;
    for (std::size_t s = chain.pi().size(); s >= K; --s) sum += chain.pi()[s - 1];
    return sum;
}

double stationarity_residual(const RenewalChain& chain) {
    const auto& pi = chain.pi();
    const auto& f = chain.f();
    const std::size_t states = pi.size();
    double residual = 0.0;
    for (std::size_t s = 0; s < states; ++s) {
        const double next = s + 1 < states ? pi[s + 1] : 0.0;
        residual += std::abs(pi[0] * f[s] + next - pi[s]);
    }
    return residual;
}

double gibbs_markov_constant(const RenewalChain& chain) {
    const auto& f = chain.f();
    const auto& r = chain.r();
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double ratio = f[i] / r[i];
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    return hi / lo;
}

double calibrate_factorial_tail(std::size_t K, double mass) {
    if (K < 2 || !(mass > 0.0 && mass < 1.0)) throw DomainError("calibrate_factorial_tail: bad arguments");
    auto tail = [&](double c) { return renewal_tail_mass(renewal_stationary(BranchLaw::factorial(c)), K); };
    double lo = 1e-6, hi = 50.0;
    if (tail(lo) > mass || tail(hi) < mass) throw NumericError("calibrate_factorial_tail: target mass out of range");
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) < mass ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gmpl
