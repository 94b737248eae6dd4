#include "gmpl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gmpl/errors.hpp"
#include "gmpl/parallel.hpp"

namespace gmpl {

namespace {

struct Mobius {
    mpz_class p, p_prev, q, q_prev;
};

Mobius branch_of(std::span<const Digit> word) {
    const auto cv = convergents(word);
    Mobius m;
    m.p = cv.back().p;
    m.q = cv.back().q;
    if (cv.size() >= 2) {
        m.p_prev = cv[cv.size() - 2].p;
        m.q_prev = cv[cv.size() - 2].q;
    } else {
        m.p_prev = 0;  // p_0 = 0, q_0 = 1
        m.q_prev = 1;
    }
    return m;
}

std::uint64_t ipow(std::uint64_t b, std::size_t e) {
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= b;
    return r;
}

// Enumeration order: by length, then lexicographic.
struct Family {
    std::size_t max_len;
    Digit max_digit;
    std::vector<std::uint64_t> offsets;  // first global index of each length

    Family(std::size_t len, Digit digit) : max_len(len), max_digit(digit) {
        std::uint64_t total = 0;
        for (std::size_t L = 1; L <= len; ++L) {
            offsets.push_back(total);
            total += ipow(digit, L);
        }
        offsets.push_back(total);
    }
    std::uint64_t size() const { return offsets.back(); }
    Digits word(std::uint64_t g) const {
        std::size_t L = 1;
        while (g >= offsets[L]) ++L;
        return word_at(g - offsets[L - 1], L, max_digit);
    }
};

void check_finite(long double v, const char* what) {
    if (!std::isfinite(static_cast<double>(v))) throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace

Digits word_at(std::uint64_t index, std::size_t len, Digit max_digit) {
    Digits w(len);
    for (std::size_t i = len; i-- > 0;) {
        w[i] = 1 + index % max_digit;
        index /= max_digit;
    }
    return w;
}

mpq_class inverse_branch(std::span<const Digit> word, const mpq_class& x) {
    if (word.empty()) throw DomainError("inverse_branch: empty word");
    const Mobius m = branch_of(word);
    const mpq_class num = m.p + x * m.p_prev;
    const mpq_class den = m.q + x * m.q_prev;
    return num / den;
}

long double branch_derivative(std::span<const Digit> word, const mpq_class& x, MeasureLaw law) {
    if (word.empty()) throw DomainError("branch_derivative: empty word");
    if (sgn(x) < 0 || x > 1) throw DomainError("branch_derivative: x must lie in [0, 1]");
    const Mobius m = branch_of(word);
    const mpq_class den = m.q + x * m.q_prev;
    mpq_class d = 1 / (den * den);
    if (law == MeasureLaw::gauss) {
        const mpq_class v = (m.p + x * m.p_prev) / den;
        d *= (1 + x) / (1 + v);
    }
    d.canonicalize();
    return static_cast<long double>(d.get_d());
}

ReturnBoundReport renyi_report(std::size_t max_len, Digit max_digit, std::size_t samples, unsigned threads) {
    if (max_len < 1 || max_digit < 1) throw DomainError("renyi_report: need max_len >= 1 and max_digit >= 1");
    if (samples < 2) throw DomainError("renyi_report: need at least 2 samples per cylinder");
    const Family fam(max_len, max_digit);
    struct Local {
        long double hi, lo;
        std::uint32_t hi_j;
    };
    std::vector<Local> per(fam.size());
    parallel_for(fam.size(), threads, [&](std::size_t g) {
        const Digits w = fam.word(g);
        const Mobius m = branch_of(w);
        const long double mu = interval_measure(cylinder_interval(w), MeasureLaw::gauss);
        const long double p = m.p.get_d(), pp = m.p_prev.get_d(), q = m.q.get_d(), qp = m.q_prev.get_d();
        Local loc{0.0L, 1e300L, 0};
        for (std::size_t j = 0; j < samples; ++j) {
            const long double x = static_cast<long double>(j) / static_cast<long double>(samples - 1);
            const long double den = q + x * qp;
            const long double v = (p + x * pp) / den;
            const long double r = (1 + x) / ((1 + v) * den * den) / mu;
            check_finite(r, "renyi_report");
            if (r > loc.hi) {
                loc.hi = r;
                loc.hi_j = static_cast<std::uint32_t>(j);
            }
            loc.lo = std::min(loc.lo, r);
        }
        per[g] = loc;
    });
    ReturnBoundReport rep;
    rep.max_len = max_len;
    rep.max_digit = max_digit;
    rep.min_ratio = 1e300;
    std::uint64_t hi_g = 0, lo_g = 0;
    for (std::uint64_t g = 0; g < per.size(); ++g) {
        if (per[g].hi > rep.worst_ratio) {
            rep.worst_ratio = static_cast<double>(per[g].hi);
            rep.worst_k = per[g].hi_j;
            hi_g = g;
        }
        if (per[g].lo < rep.min_ratio) {
            rep.min_ratio = static_cast<double>(per[g].lo);
            lo_g = g;
        }
    }
    rep.worst_word = fam.word(hi_g);
    rep.min_word = fam.word(lo_g);
    rep.constant = std::max(rep.worst_ratio, 1.0 / rep.min_ratio);
    rep.evaluated = fam.size() * samples;
    return rep;
}

Digits cylinder_self_overlap(std::span<const Digit> word, std::size_t k) {
    const std::size_t n = word.size();
    if (k < 1 || k > n) throw DomainError("cylinder_self_overlap: need 1 <= k <= len(word)");
    if (!std::equal(word.begin() + static_cast<std::ptrdiff_t>(k), word.end(), word.begin())) return {};
    Digits out(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(k));
    out.insert(out.end(), word.begin(), word.end());
    return out;
}

std::optional<RationalInterval> geometric_self_overlap(std::span<const Digit> word, std::size_t k) {
    const std::size_t n = word.size();
    if (k < 1 || k > n) throw DomainError("geometric_self_overlap: need 1 <= k <= len(word)");
    const RationalInterval a = cylinder_interval(word);
    const RationalInterval shifted =
        k == n ? RationalInterval(mpq_class(0), mpq_class(1)) : cylinder_interval(word.subspan(k));
    const mpq_class lo = std::max(a.lo(), shifted.lo());
    const mpq_class hi = std::min(a.hi(), shifted.hi());
    if (lo >= hi) return std::nullopt;
    const auto head = word.subspan(0, k);
    mpq_class x = inverse_branch(head, lo), y = inverse_branch(head, hi);
    if (y < x) std::swap(x, y);
    return RationalInterval(x, y);
}

ReturnBoundReport short_return_report(std::size_t max_len, Digit max_digit, unsigned threads) {
    if (max_len < 2) throw DomainError("short_return_report: need max_len >= 2");
    if (max_digit < 1) throw DomainError("short_return_report: need max_digit >= 1");
    const Family fam(max_len, max_digit);
    struct Local {
        long double ratio;
        std::uint32_t k;
        std::uint32_t mismatches;
    };
    std::vector<Local> per(fam.size());
    parallel_for(fam.size(), threads, [&](std::size_t g) {
        const Digits w = fam.word(g);
        const std::size_t n = w.size();
        const long double mu = interval_measure(cylinder_interval(w), MeasureLaw::gauss);
        const long double denom = std::pow(mu, 1.0L + 1.0L / static_cast<long double>(1 + n));
        Local loc{0.0L, 0, 0};
        for (std::size_t k = 1; k <= n; ++k) {
            const Digits ov = cylinder_self_overlap(w, k);
            const auto geo = geometric_self_overlap(w, k);
            if (ov.empty() != !geo.has_value() || (geo && !(cylinder_interval(ov) == *geo))) ++loc.mismatches;
            if (ov.empty()) continue;
            const long double r = interval_measure(cylinder_interval(ov), MeasureLaw::gauss) / denom;
            check_finite(r, "short_return_report");
            if (r > loc.ratio) {
                loc.ratio = r;
                loc.k = static_cast<std::uint32_t>(k);
            }
        }
        per[g] = loc;
    });
    ReturnBoundReport rep;
    rep.max_len = max_len;
    rep.max_digit = max_digit;
    std::uint64_t best = 0;
    for (std::uint64_t g = 0; g < per.size(); ++g) {
        rep.mismatches += per[g].mismatches;
        if (per[g].ratio > rep.worst_ratio) {
            rep.worst_ratio = static_cast<double>(per[g].ratio);
            rep.worst_k = per[g].k;
            best = g;
        }
    }
    for (std::size_t L = 1; L <= max_len; ++L) rep.evaluated += L * ipow(max_digit, L);
    rep.worst_word = fam.word(best);
    rep.constant = rep.worst_ratio;
    return rep;
}

}  // namespace gmpl
