#include "gmpl/targets.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include <mpfr.h>

#include "gmpl/errors.hpp"
#include "gmpl/parallel.hpp"
#include "gmpl/transfer.hpp"

namespace gmpl {

namespace {

constexpr mpfr_prec_t kPrec = 192;

// floor(x^(1/m)) for real x >= 0, corrected to be exact at perfect powers.
Digit floor_root(long double x, int m) {
    if (x < 1.0L) return 0;
    long double r = std::floor(std::pow(x, 1.0L / static_cast<long double>(m)));
    auto pw = [m](long double b) {
        long double p = 1;
        for (int k = 0; k < m; ++k) p *= b;
        return p;
    };
    while (pw(r + 1) <= x) r += 1;
    while (r > 0 && pw(r) > x) r -= 1;
    return static_cast<Digit>(r);
}

long double sum_cylinders(const std::vector<Digits>& words) {
    long double total = 0;
    for (const auto& w : words) total += interval_measure(cylinder_interval(w), MeasureLaw::gauss);
    return total;
}

struct Mpfr {
    mpfr_t v;
    Mpfr() { mpfr_init2(v, kPrec); }
    ~Mpfr() { mpfr_clear(v); }
    Mpfr(const Mpfr&) = delete;
    Mpfr& operator=(const Mpfr&) = delete;
};

// lnΓ(N + k/N) for k = 0, 1, 2 at 192 bits.
void lngamma_shift(mpfr_t out, Digit N, unsigned k) {
    Mpfr x;
    mpfr_set_ui(x.v, static_cast<unsigned long>(k), MPFR_RNDN);
    mpfr_div_ui(x.v, x.v, static_cast<unsigned long>(N), MPFR_RNDN);
    mpfr_add_ui(x.v, x.v, static_cast<unsigned long>(N), MPFR_RNDN);
    mpfr_lngamma(out, x.v, MPFR_RNDN);
}

}  // namespace

TargetFamily::TargetFamily(Variant v) : v_(std::move(v)) {
    if (const auto* t = std::get_if<TailSet>(&v_)) {
        if (!(t->theta > 0.0) || !std::isfinite(t->theta)) throw DomainError("TailSet: theta must be positive");
    } else if (const auto* t = std::get_if<TupleSet>(&v_)) {
        if (t->m < 1) throw DomainError("TupleSet: m must be >= 1");
        if (t->m > 64) throw DomainError("TupleSet: m must be <= 64");
        if (!(t->theta > 0.0) || !std::isfinite(t->theta)) throw DomainError("TupleSet: theta must be positive");
    } else if (const auto* p = std::get_if<PatternSet>(&v_)) {
        if (p->exponent_num < 1 || p->exponent_den < 1 || p->exponent_num > p->exponent_den)
            throw DomainError("PatternSet: exponent must be a rational in (0, 1]");
    }
}

std::size_t TargetFamily::prefix_length() const {
    if (std::holds_alternative<TailSet>(v_)) return 1;
    if (const auto* t = std::get_if<TupleSet>(&v_)) return static_cast<std::size_t>(t->m);
    return 2;
}

std::string TargetFamily::name() const {
    switch (v_.index()) {
    case 0: return "tail";
    case 1: return "tuple";
    case 2: return "pattern";
    default: return "negcontrol";
    }
}

std::string TargetFamily::describe() const {
    std::ostringstream os;
    if (const auto* t = std::get_if<TailSet>(&v_)) os << "tail(theta=" << t->theta << ")";
    else if (const auto* t = std::get_if<TupleSet>(&v_)) os << "tuple(m=" << t->m << ",theta=" << t->theta << ")";
    else if (const auto* p = std::get_if<PatternSet>(&v_))
        os << "pattern(exponent=" << p->exponent_num << "/" << p->exponent_den << ")";
    else os << "negcontrol";
    return os.str();
}

Digit TargetFamily::threshold(std::uint64_t n) const {
    if (n < 1) throw DomainError("target family: n must be >= 1");
    Digit th = 0;
    if (const auto* t = std::get_if<TailSet>(&v_)) {
        th = static_cast<Digit>(std::floor(static_cast<long double>(t->theta) * static_cast<long double>(n))) + 1;
    } else if (const auto* t = std::get_if<TupleSet>(&v_)) {
        th = floor_root(static_cast<long double>(t->theta) * static_cast<long double>(n), t->m);
    } else if (const auto* p = std::get_if<PatternSet>(&v_)) {
        // largest j with j^den <= n^num
        mpz_class x;
        mpz_pow_ui(x.get_mpz_t(), mpz_class(static_cast<unsigned long>(n)).get_mpz_t(),
                   static_cast<unsigned long>(p->exponent_num));
        mpz_class j;
        mpz_root(j.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(p->exponent_den));
        th = static_cast<Digit>(j.get_ui());
    } else {
        th = n;
    }
    if (th < 1) throw DomainError("target family " + describe() + ": threshold below 1 at n=" + std::to_string(n));
    return th;
}

bool TargetFamily::contains(std::span<const Digit> block, Digit th) const {
    switch (v_.index()) {
    case 0: return block[0] >= th;
    case 1:
        for (const Digit d : block)
            if (d < th) return false;
        return true;
    case 2: return block[0] == th && block[1] == th;
    default: return (block[0] == 1 && block[1] == th) || (block[0] == th && block[1] == 1);
    }
}

std::vector<Digits> TargetFamily::words(std::uint64_t n) const {
    const Digit th = threshold(n);
    if (std::holds_alternative<PatternSet>(v_)) return {Digits{th, th}};
    if (std::holds_alternative<NegControl>(v_)) {
        if (th == 1) return {Digits{1, 1}};
        return {Digits{1, th}, Digits{th, 1}};
    }
    return {};
}

std::vector<RationalInterval> TargetFamily::intervals(std::uint64_t n) const {
    const Digit th = threshold(n);
    std::vector<RationalInterval> out;
    if (std::holds_alternative<TailSet>(v_) ||
        (std::holds_alternative<TupleSet>(v_) && std::get<TupleSet>(v_).m == 1)) {
        out.emplace_back(mpq_class(0), mpq_class(1, th));
        return out;
    }
    if (std::holds_alternative<TupleSet>(v_))
        throw DomainError("TupleSet with m >= 2 is a countable union of intervals");
    for (const auto& w : words(n)) out.push_back(cylinder_interval(w));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.lo() < b.lo(); });
    return out;
}

long double tuple_tail_measure(Digit N, int k) {
    if (N < 1) throw DomainError("tuple_tail_measure: N must be >= 1");
    if (k == 1) return gauss_measure(mpq_class(0), mpq_class(1, N));
    Mpfr r, t, ln2;
    mpfr_const_log2(ln2.v, MPFR_RNDN);
    if (k == 2) {
        // log(1 + 1/N^2) / log 2
        mpfr_set_ui(t.v, static_cast<unsigned long>(N), MPFR_RNDN);
        mpfr_sqr(t.v, t.v, MPFR_RNDN);
        mpfr_ui_div(t.v, 1, t.v, MPFR_RNDN);
        mpfr_log1p(r.v, t.v, MPFR_RNDN);
    } else if (k == 3) {
        // (lnΓ(N + 2/N) - 2 lnΓ(N + 1/N) + lnΓ(N)) / log 2
        lngamma_shift(r.v, N, 2);
        lngamma_shift(t.v, N, 1);
        mpfr_mul_ui(t.v, t.v, 2, MPFR_RNDN);
        mpfr_sub(r.v, r.v, t.v, MPFR_RNDN);
        lngamma_shift(t.v, N, 0);
        mpfr_add(r.v, r.v, t.v, MPFR_RNDN);
    } else {
        throw DomainError("tuple_tail_measure: closed form available for block length <= 3");
    }
    mpfr_div(r.v, r.v, ln2.v, MPFR_RNDN);
    return mpfr_get_ld(r.v, MPFR_RNDN);
}

long double target_measure(const TargetFamily& fam, std::uint64_t n) {
    const Digit th = fam.threshold(n);
    if (std::holds_alternative<TailSet>(fam.variant())) return tuple_tail_measure(th, 1);
    if (const auto* t = std::get_if<TupleSet>(&fam.variant())) return tuple_tail_measure(th, t->m);
    return sum_cylinders(fam.words(n));
}

std::uint64_t hits_in_orbit(std::span<const Digit> digits, const TargetFamily& fam, std::uint64_t n) {
    if (n < 1) throw DomainError("hits_in_orbit: n must be >= 1");
    return hits_in_orbit(digits, fam, n, fam.threshold(n));
}

std::uint64_t hits_in_orbit(std::span<const Digit> digits, const TargetFamily& fam, std::uint64_t n, Digit th) {
    const std::size_t m = fam.prefix_length();
    if (n < 1) throw DomainError("hits_in_orbit: n must be >= 1");
    if (digits.size() < n - 1 + m) throw NumericError("precision shortfall");
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n; ++i)
        if (fam.contains(digits.subspan(i, m), th)) ++hits;
    return hits;
}

const char* to_string(OverlapMethod m) {
    switch (m) {
    case OverlapMethod::exact: return "exact";
    case OverlapMethod::operator_: return "operator";
    default: return "montecarlo";
    }
}

OverlapMethod parse_overlap_method(const std::string& name) {
    if (name == "exact") return OverlapMethod::exact;
    if (name == "operator") return OverlapMethod::operator_;
    if (name == "montecarlo") return OverlapMethod::montecarlo;
    throw ConfigError("unknown overlap method '" + name + "'");
}

Digits overlap_word(std::span<const Digit> w, std::span<const Digit> v, std::size_t i) {
    const std::size_t m = w.size();
    if (v.size() != m || i < 1 || i > m) throw DomainError("overlap_word: need equal lengths and 1 <= i <= m");
    if (!std::equal(w.begin() + static_cast<std::ptrdiff_t>(i), w.end(), v.begin())) return {};
    Digits out(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(i));
    out.insert(out.end(), v.begin(), v.end());
    return out;
}

namespace {

OverlapResult overlap_exact(const TargetFamily& fam, std::uint64_t n, std::uint64_t i) {
    const std::size_t m = fam.prefix_length();
    const bool threshold_family = std::holds_alternative<TailSet>(fam.variant()) ||
                                  std::holds_alternative<TupleSet>(fam.variant());
    if (threshold_family) {
        // the intersection is {a_1 .. a_{m+i} >= N} when the blocks touch
        if (i > m || m + i > 3)
            throw DomainError("overlap_measure: no exact form for " + fam.describe() + " at i=" + std::to_string(i));
        const long double mass = tuple_tail_measure(fam.threshold(n), static_cast<int>(m + i));
        return {mass, mass * 1e-15L};
    }
    if (i > m)
        throw DomainError("overlap_measure: no exact form for " + fam.describe() + " at i=" + std::to_string(i));
    const auto words = fam.words(n);
    std::vector<Digits> joined;
    for (const auto& w : words)
        for (const auto& v : words)
            if (auto u = overlap_word(w, v, i); !u.empty()) joined.push_back(std::move(u));
    std::sort(joined.begin(), joined.end());
    joined.erase(std::unique(joined.begin(), joined.end()), joined.end());
    const long double mass = sum_cylinders(joined);
    return {mass, mass * 1e-15L};
}

long double overlap_on_grid(const TargetFamily& fam, std::uint64_t n, std::uint64_t i, std::size_t grid_size,
                            unsigned threads) {
    const auto ivs = fam.intervals(n);
    const UlamGrid grid = make_grid(grid_size, ivs);
    const UlamWeights W = build_ulam(grid, kDefaultBranchTol, threads);
    return operator_overlap(W, grid.cells_covering(ivs), i);
}

OverlapResult overlap_operator(const TargetFamily& fam, std::uint64_t n, std::uint64_t i,
                               const OverlapOptions& opts) {
    const long double fine = overlap_on_grid(fam, n, i, opts.grid_size, opts.threads);
    const long double coarse = overlap_on_grid(fam, n, i, opts.grid_size / 2, opts.threads);
    return {fine, std::abs(fine - coarse)};
}

OverlapResult overlap_montecarlo(const TargetFamily& fam, std::uint64_t n, std::uint64_t i,
                                 const OverlapOptions& opts) {
    if (opts.trials < 1) throw DomainError("overlap_measure: trials must be >= 1");
    const std::size_t m = fam.prefix_length();
    const Digit th = fam.threshold(n);
    std::vector<unsigned char> hit(opts.trials, 0);
    std::atomic<std::uint64_t> shortfalls{0};
    parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
        DyadicPoint point(StreamId{opts.seed, t, 0}, MeasureLaw::gauss);
        const Digits d = sample_certified_digits(point, i + m);
        if (d.size() < i + m) {
            shortfalls.fetch_add(1);
            return;
        }
        const std::span<const Digit> s(d);
        hit[t] = fam.contains(s.subspan(0, m), th) && fam.contains(s.subspan(i, m), th);
    });
    if (shortfalls.load() > 0) throw NumericError("overlap_measure: precision shortfall after retry cap");
    std::uint64_t count = 0;
    for (const auto h : hit) count += h;
    const long double p = static_cast<long double>(count) / static_cast<long double>(opts.trials);
    return {p, std::sqrt(p * (1 - p) / static_cast<long double>(opts.trials))};
}

}  // namespace

OverlapResult overlap_measure(const TargetFamily& fam, std::uint64_t n, std::uint64_t i, OverlapMethod method,
                              const OverlapOptions& opts) {
    if (i < 1) throw DomainError("overlap_measure: i must be >= 1");
    switch (method) {
    case OverlapMethod::exact: return overlap_exact(fam, n, i);
    case OverlapMethod::operator_: return overlap_operator(fam, n, i, opts);
    default: return overlap_montecarlo(fam, n, i, opts);
    }
}

long double assumption_b_ratio(const TargetFamily& fam, std::uint64_t n, std::uint64_t i, OverlapMethod method,
                               const OverlapOptions& opts) {
    return overlap_measure(fam, n, i, method, opts).mass / target_measure(fam, n);
}

}  // namespace gmpl
