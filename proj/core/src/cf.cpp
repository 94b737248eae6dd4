#include "gmpl/cf.hpp"

#include <algorithm>
#include <utility>

#include <mpfr.h>

#include "gmpl/errors.hpp"

namespace gmpl {

namespace {

using u128 = unsigned __int128;
using i128 = __int128;

constexpr mpfr_prec_t kWorkingPrecision = 128;

// Bits kept in a coarse endpoint approximation. Keeps every quantity in the
// small lockstep below 2^125 and every accumulated matrix entry below 2^62.
constexpr std::size_t kCoarseBits = 124;
constexpr i128 kMatrixLimit = static_cast<i128>(1) << 62;

Digit saturate(u128 d) {
    return d > static_cast<u128>(kSaturatedDigit) ? kSaturatedDigit : static_cast<Digit>(d);
}

struct SmallEnd {
    u128 n;
    u128 d;
};

inline u128 small_quotient(u128 num, u128 den) {
    // Most partial quotients are 1 or 2.
    if (num < (den << 1)) return 1;
    if (num < den * 3) return 2;
    return num / den;
}

// One certified step on the open interval (lo, hi). Returns the digit, or 0
// if the interval straddles a branch boundary or touches 0.
inline u128 small_step(SmallEnd& lo, SmallEnd& hi) {
    if (lo.n == 0) return 0;
    const u128 d = small_quotient(hi.d, hi.n);
    const u128 t = lo.d - d * lo.n;
    if (t > lo.n) return 0;
    const SmallEnd next_lo{hi.d - d * hi.n, hi.n};
    hi = SmallEnd{t, lo.n};
    lo = next_lo;
    return d;
}

u128 to_u128(const mpz_class& x) {
    const mpz_srcptr z = x.get_mpz_t();
    const u128 lo = mpz_getlimbn(z, 0);
    const u128 hi = mpz_size(z) > 1 ? mpz_getlimbn(z, 1) : 0;
    return lo | (hi << 64);
}

// Lockstep expansion of both endpoints of an open interval. The lower
// endpoint is ln/ld, the upper hn/hd; fractions need not be reduced.
class Expander {
public:
    Expander(mpz_class ln, mpz_class ld, mpz_class hn, mpz_class hd)
        : ln_(std::move(ln)), ld_(std::move(ld)), hn_(std::move(hn)), hd_(std::move(hd)) {}

    Digits run(std::size_t max_count, bool accelerate) {
        while (out_.size() < max_count) {
            const std::size_t bits =
                std::max(mpz_sizeinbase(ld_.get_mpz_t(), 2), mpz_sizeinbase(hd_.get_mpz_t(), 2));
            if (bits <= kCoarseBits) {
                finish_small(max_count);
                break;
            }
            if (accelerate && coarse_round(max_count) > 0) continue;
            if (!exact_step()) break;
        }
        return std::move(out_);
    }

private:
    void finish_small(std::size_t max_count) {
        SmallEnd lo{to_u128(ln_), to_u128(ld_)};
        SmallEnd hi{to_u128(hn_), to_u128(hd_)};
        while (out_.size() < max_count) {
            const u128 d = small_step(lo, hi);
            if (d == 0) break;
            out_.push_back(saturate(d));
        }
    }

    static SmallEnd approx(const mpz_class& n, const mpz_class& d, bool upper, mpz_class& scratch) {
        const std::size_t bits = mpz_sizeinbase(d.get_mpz_t(), 2);
        if (bits <= kCoarseBits) return SmallEnd{to_u128(n), to_u128(d)};
        const auto shift = static_cast<mp_bitcnt_t>(bits - kCoarseBits);
        mpz_tdiv_q_2exp(scratch.get_mpz_t(), n.get_mpz_t(), shift);
        const u128 sn = to_u128(scratch);
        mpz_tdiv_q_2exp(scratch.get_mpz_t(), d.get_mpz_t(), shift);
        const u128 sd = to_u128(scratch);
        if (!upper) return SmallEnd{sn, sd + 1};
        if (sn + 1 > sd) return SmallEnd{1, 1};
        return SmallEnd{sn + 1, sd};
    }

    // Digits of a coarse enclosure are certified for the exact interval.
    // Returns the number of digits emitted this round.
    std::size_t coarse_round(std::size_t max_count) {
        SmallEnd lo = approx(ln_, ld_, false, t0_);
        SmallEnd hi = approx(hn_, hd_, true, t0_);
        i128 m00 = 1, m01 = 0, m10 = 0, m11 = 1;
        std::size_t got = 0;
        while (out_.size() < max_count) {
            const u128 d = small_step(lo, hi);
            if (d == 0 || d >= static_cast<u128>(kMatrixLimit)) break;
            const auto a = static_cast<i128>(d);
            const i128 n00 = m10 - a * m00;
            const i128 n01 = m11 - a * m01;
            if (n00 >= kMatrixLimit || -n00 >= kMatrixLimit || n01 >= kMatrixLimit ||
                -n01 >= kMatrixLimit)
                break;
            m10 = m00;
            m11 = m01;
            m00 = n00;
            m01 = n01;
            out_.push_back(static_cast<Digit>(d));
            ++got;
        }
        if (got == 0) return 0;
        const long c[4] = {static_cast<long>(m00), static_cast<long>(m01), static_cast<long>(m10),
                           static_cast<long>(m11)};
        apply(ln_, ld_, c);
        apply(hn_, hd_, c);
        if (got % 2 == 1) {
            std::swap(ln_, hn_);
            std::swap(ld_, hd_);
        }
        return got;
    }

    static void addmul_si(mpz_ptr acc, mpz_srcptr x, long c) {
        if (c >= 0)
            mpz_addmul_ui(acc, x, static_cast<unsigned long>(c));
        else
            mpz_submul_ui(acc, x, static_cast<unsigned long>(-c));
    }

    // (n, d) <- (c0 n + c1 d, c2 n + c3 d)
    void apply(mpz_class& n, mpz_class& d, const long (&c)[4]) {
        mpz_mul_si(t0_.get_mpz_t(), n.get_mpz_t(), c[0]);
        addmul_si(t0_.get_mpz_t(), d.get_mpz_t(), c[1]);
        mpz_mul_si(t1_.get_mpz_t(), n.get_mpz_t(), c[2]);
        addmul_si(t1_.get_mpz_t(), d.get_mpz_t(), c[3]);
        std::swap(n, t0_);
        std::swap(d, t1_);
    }

    bool exact_step() {
        if (sgn(ln_) == 0) return false;
        mpz_fdiv_qr(q_.get_mpz_t(), t1_.get_mpz_t(), hd_.get_mpz_t(), hn_.get_mpz_t());
        // t0 = ld - q*ln must lie in (0, ln]
        t0_ = ld_;
        mpz_submul(t0_.get_mpz_t(), q_.get_mpz_t(), ln_.get_mpz_t());
        if (cmp(t0_, ln_) > 0) return false;
        // lower' = (hd - q*hn)/hn, upper' = (ld - q*ln)/ln
        std::swap(ld_, hn_);  // ld_ <- hn (new lower den), hn_ <- old ld (discarded)
        std::swap(ln_, t1_);  // ln_ <- remainder, t1_ <- old ln
        hd_ = t1_;            // new upper den = old ln
        hn_ = t0_;
        out_.push_back(mpz_fits_ulong_p(q_.get_mpz_t()) ? q_.get_ui() : kSaturatedDigit);
        return true;
    }

    mpz_class ln_, ld_, hn_, hd_;
    mpz_class q_, t0_, t1_;
    Digits out_;
};

mpz_class pow2(unsigned bits) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, bits);
    return r;
}

// Decides U < 1/(1+x) from W-word prefixes of U and x. Returns +1 accept,
// -1 reject, 0 undecided.
int gauss_decision(const mpz_class& x, const mpz_class& u, unsigned bits) {
    const mpz_class one = pow2(bits);
    const mpz_class bound = one * one;
    if ((u + 1) * (one + x + 1) <= bound) return 1;
    if (u * (one + x) >= bound) return -1;
    return 0;
}

mpz_class words_to_mpz(std::span<const std::uint64_t> words) {
    mpz_class r;
    if (!words.empty())
        mpz_import(r.get_mpz_t(), words.size(), 1, sizeof(std::uint64_t), 0, 0, words.data());
    return r;
}

// Exact rejection sampling against the density 1/(1+x) on (0,1), bounded
// above by 1. Words are drawn from next_x / next_u; accepted x words are
// returned, and further x bits must then come from next_x.
template <class NextX, class NextU>
std::vector<std::uint64_t> gauss_candidate(NextX&& next_x, NextU&& next_u) {
    std::vector<std::uint64_t> xs;
    std::vector<std::uint64_t> us;
    for (;;) {
        xs.push_back(next_x());
        us.push_back(next_u());
        const int decision =
            gauss_decision(words_to_mpz(xs), words_to_mpz(us), static_cast<unsigned>(64 * xs.size()));
        if (decision > 0) return xs;
        if (decision < 0) return {};
    }
}

}  // namespace

std::vector<Convergent> convergents(std::span<const Digit> word) {
    if (word.empty()) throw DomainError("convergents: empty word");
    std::vector<Convergent> out;
    out.reserve(word.size());
    mpz_class p_prev = 1, p = 0, q_prev = 0, q = 1;
    for (const Digit a : word) {
        if (a == 0) throw DomainError("convergents: partial quotients must be >= 1");
        mpz_class p_next = p_prev;
        mpz_addmul_ui(p_next.get_mpz_t(), p.get_mpz_t(), a);
        mpz_class q_next = q_prev;
        mpz_addmul_ui(q_next.get_mpz_t(), q.get_mpz_t(), a);
        p_prev = std::move(p);
        q_prev = std::move(q);
        p = p_next;
        q = q_next;
        out.push_back({p, q});
    }
    return out;
}

RationalInterval::RationalInterval(mpq_class lo, mpq_class hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    lo_.canonicalize();
    hi_.canonicalize();
    if (!(lo_ < hi_)) throw DomainError("RationalInterval: requires lo < hi");
    if (sgn(lo_) < 0 || hi_ > 1) throw DomainError("RationalInterval: endpoints must lie in [0, 1]");
}

const char* to_string(MeasureLaw law) { return law == MeasureLaw::gauss ? "gauss" : "lebesgue"; }

MeasureLaw parse_measure_law(const std::string& name) {
    if (name == "gauss") return MeasureLaw::gauss;
    if (name == "lebesgue") return MeasureLaw::lebesgue;
    throw DomainError("unknown measure law '" + name + "'");
}

RationalInterval cylinder_interval(std::span<const Digit> word) {
    const auto cv = convergents(word);
    const Convergent& last = cv.back();
    const mpz_class p_prev = cv.size() > 1 ? cv[cv.size() - 2].p : mpz_class(0);
    const mpz_class q_prev = cv.size() > 1 ? cv[cv.size() - 2].q : mpz_class(1);
    mpq_class a(last.p, last.q);
    mpq_class b(last.p + p_prev, last.q + q_prev);
    if (a < b) return RationalInterval(a, b);
    return RationalInterval(b, a);
}

long double gauss_measure(const mpq_class& lo, const mpq_class& hi) {
    // log1p((hi - lo)/(1 + lo)) keeps full relative precision for thin intervals.
    const mpq_class ratio = (hi - lo) / (1 + lo);
    mpfr_t r, l2;
    mpfr_init2(r, kWorkingPrecision);
    mpfr_init2(l2, kWorkingPrecision);
    mpfr_set_q(r, ratio.get_mpq_t(), MPFR_RNDN);
    mpfr_log1p(r, r, MPFR_RNDN);
    mpfr_const_log2(l2, MPFR_RNDN);
    mpfr_div(r, r, l2, MPFR_RNDN);
    const long double out = mpfr_get_ld(r, MPFR_RNDN);
    mpfr_clear(r);
    mpfr_clear(l2);
    return out;
}

long double interval_measure(const RationalInterval& iv, MeasureLaw law) {
    if (law == MeasureLaw::gauss) return gauss_measure(iv.lo(), iv.hi());
    const mpq_class width = iv.hi() - iv.lo();
    mpfr_t r;
    mpfr_init2(r, kWorkingPrecision);
    mpfr_set_q(r, width.get_mpq_t(), MPFR_RNDN);
    const long double out = mpfr_get_ld(r, MPFR_RNDN);
    mpfr_clear(r);
    return out;
}

Digits rational_cf(const mpz_class& num, const mpz_class& den) {
    if (!(sgn(num) > 0 && num < den)) throw DomainError("rational_cf: requires 0 < num < den");
    Digits out;
    mpz_class a = den, b = num, q, r;
    while (sgn(b) != 0) {
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
        if (!mpz_fits_ulong_p(q.get_mpz_t()))
            throw DomainError("rational_cf: partial quotient exceeds 64 bits");
        out.push_back(q.get_ui());
        a = b;
        b = r;
    }
    return out;
}

mpq_class evaluate_cf(std::span<const Digit> word) {
    if (word.empty()) return 0;
    const auto cv = convergents(word);
    return mpq_class(cv.back().p, cv.back().q);
}

Digits certified_digits(const RationalInterval& iv, std::size_t max_count) {
    Expander e(iv.lo().get_num(), iv.lo().get_den(), iv.hi().get_num(), iv.hi().get_den());
    return e.run(max_count, true);
}

Digits certified_digits_exact(const RationalInterval& iv, std::size_t max_count) {
    Expander e(iv.lo().get_num(), iv.lo().get_den(), iv.hi().get_num(), iv.hi().get_den());
    return e.run(max_count, false);
}

Digits certified_digits_dyadic(const mpz_class& m, unsigned bits, std::size_t max_count) {
    const mpz_class den = pow2(bits);
    Expander e(m, den, m + 1, den);
    return e.run(max_count, true);
}

RationalInterval sample_dyadic(RandomStream& rng, unsigned bits, MeasureLaw law) {
    if (bits == 0) throw DomainError("sample_dyadic: bits must be >= 1");
    std::vector<std::uint64_t> words;
    if (law == MeasureLaw::gauss) {
        // x and U words interleave on the single stream.
        do {
            words = gauss_candidate([&] { return rng.next_u64(); }, [&] { return rng.next_u64(); });
        } while (words.empty());
    }
    const std::size_t need = (bits + 63) / 64;
    while (words.size() < need) words.push_back(rng.next_u64());
    mpz_class m = words_to_mpz(words);
    mpz_tdiv_q_2exp(m.get_mpz_t(), m.get_mpz_t(), 64 * words.size() - bits);
    const mpz_class den = pow2(bits);
    return RationalInterval(mpq_class(m, den), mpq_class(m + 1, den));
}

DyadicPoint::DyadicPoint(StreamId id, MeasureLaw law) : xbits_(id) {
    if (law == MeasureLaw::lebesgue) return;
    // Candidate c reads x from lane + 2c and U from lane + 2c + 1.
    for (std::uint32_t c = 0;; ++c) {
        RandomStream xs(StreamId{id.seed, id.trial, id.lane + 2 * c});
        RandomStream us(StreamId{id.seed, id.trial, id.lane + 2 * c + 1});
        auto words = gauss_candidate([&] { return xs.next_u64(); }, [&] { return us.next_u64(); });
        if (!words.empty()) {
            words_ = std::move(words);
            xbits_ = xs;
            return;
        }
    }
}

void DyadicPoint::ensure_words(std::size_t count) {
    while (words_.size() < count) words_.push_back(xbits_.next_u64());
}

mpz_class DyadicPoint::numerator(unsigned bits) {
    const std::size_t need = (bits + 63) / 64;
    ensure_words(need);
    mpz_class m = words_to_mpz(std::span(words_).first(need));
    mpz_tdiv_q_2exp(m.get_mpz_t(), m.get_mpz_t(), 64 * need - bits);
    return m;
}

RationalInterval DyadicPoint::interval(unsigned bits) {
    const mpz_class m = numerator(bits);
    const mpz_class den = pow2(bits);
    return RationalInterval(mpq_class(m, den), mpq_class(m + 1, den));
}

Digits DyadicPoint::digits(unsigned bits, std::size_t max_count) {
    return certified_digits_dyadic(numerator(bits), bits, max_count);
}

Digits sample_certified_digits(DyadicPoint& point, std::size_t needed, int max_doublings) {
    auto bits = static_cast<unsigned>(4 * needed + 64);
    Digits d = point.digits(bits, needed);
    for (int i = 0; i < max_doublings && d.size() < needed; ++i) {
        bits *= 2;
        d = point.digits(bits, needed);
    }
    return d;
}

}  // namespace gmpl
