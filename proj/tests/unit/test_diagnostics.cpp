#include <cmath>
#include <numbers>

#include "doctest.h"
#include "generators.hpp"
#include "gmpl/diagnostics.hpp"
#include "gmpl/errors.hpp"

using namespace gmpl;

namespace {

double h(double x) { return 1 / ((1 + x) * std::numbers::ln2); }

double gm(const Digits& w) { return static_cast<double>(interval_measure(cylinder_interval(w), MeasureLaw::gauss)); }

}  // namespace

TEST_CASE("branch derivatives") {
    CHECK(branch_derivative(Digits{1}, mpq_class(0), MeasureLaw::lebesgue) == 1.0);
    CHECK(branch_derivative(Digits{2}, mpq_class(0), MeasureLaw::lebesgue) == 0.25);
    CHECK(branch_derivative(Digits{2}, mpq_class(1), MeasureLaw::lebesgue) == doctest::Approx(1.0 / 9));
    CHECK(inverse_branch(Digits{1, 2}, mpq_class(0)) == mpq_class(2, 3));
    CHECK_THROWS_AS(branch_derivative(Digits{}, mpq_class(0), MeasureLaw::gauss), DomainError);
    CHECK_THROWS_AS(branch_derivative(Digits{1}, mpq_class(3, 2), MeasureLaw::gauss), DomainError);

    gen::Gen g(31);
    for (int t = 0; t < 100; ++t) {
        const Digits w = g.word(1, 5, 30);
        const mpq_class x = g.rational(10'000);
        const double leb = static_cast<double>(branch_derivative(w, x, MeasureLaw::lebesgue));
        const double gau = static_cast<double>(branch_derivative(w, x, MeasureLaw::gauss));
        const double v = inverse_branch(w, x).get_d();
        CHECK(gau * h(x.get_d()) == doctest::Approx(leb * h(v)).epsilon(1e-12));
        // v_a maps into the cylinder of a.
        CHECK(cylinder_interval(w).contains(inverse_branch(w, x)));
    }
}

TEST_CASE("mean-value identity: the integral of v'_a over dmu is mu(a)") {
    gen::Gen g(32);
    for (int t = 0; t < 20; ++t) {
        const Digits w = g.word(1, 4, 12);
        const int M = 2000;
        long double s = 0;
        for (int i = 0; i <= M; ++i) {
            const mpq_class x(i, M);
            const long double wt = (i == 0 || i == M) ? 1 : (i % 2 ? 4 : 2);
            s += wt * branch_derivative(w, x, MeasureLaw::gauss) * h(x.get_d());
        }
        s /= 3.0L * M;
        CHECK(static_cast<double>(s) == doctest::Approx(gm(w)).epsilon(1e-9));
    }
}

TEST_CASE("single-digit branches have distortion at most 4") {
    for (Digit k = 1; k <= 50; ++k) {
        const Digits w{k};
        double lo = 1e300, hi = 0;
        for (int j = 0; j <= 64; ++j) {
            const double d = static_cast<double>(branch_derivative(w, mpq_class(j, 64), MeasureLaw::lebesgue));
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        // endpoints 1/k^2 and 1/(k+1)^2
        CHECK(hi == doctest::Approx(1.0 / (k * k)));
        CHECK(lo == doctest::Approx(1.0 / ((k + 1.0) * (k + 1.0))));
        CHECK(hi / lo <= 4.0);
    }
}

TEST_CASE("renyi report") {
    const ReturnBoundReport a = renyi_report(4, 20, 16);
    const ReturnBoundReport b = renyi_report(4, 20, 32);
    CHECK(std::isfinite(a.constant));
    CHECK(a.constant >= 1.0);
    CHECK(std::abs(b.constant / a.constant - 1) <= 0.05);
    CHECK(a.min_ratio <= 1.0);
    CHECK(a.worst_ratio >= 1.0);
    CHECK(a.evaluated == (20ull + 400 + 8000 + 160000) * 16);
    CHECK(renyi_report(4, 20, 16, 1).worst_word == renyi_report(4, 20, 16, 3).worst_word);
    CHECK_THROWS_AS(renyi_report(0, 20, 16), DomainError);
    CHECK_THROWS_AS(renyi_report(2, 20, 1), DomainError);
}

TEST_CASE("cylinder self-overlap algebra") {
    CHECK(cylinder_self_overlap(Digits{1, 2}, 1).empty());
    CHECK(cylinder_self_overlap(Digits{1, 1, 1}, 1) == Digits{1, 1, 1, 1});
    CHECK(cylinder_self_overlap(Digits{1, 2, 1, 2}, 2) == Digits{1, 2, 1, 2, 1, 2});
    CHECK(cylinder_self_overlap(Digits{1, 2}, 2) == Digits{1, 2, 1, 2});
    CHECK_THROWS_AS(cylinder_self_overlap(Digits{1, 2}, 0), DomainError);
    CHECK_THROWS_AS(cylinder_self_overlap(Digits{1, 2}, 3), DomainError);

    // [1,1] at k = 1: exact intervals (3/5, 2/3) inside (1/2, 2/3).
    CHECK(cylinder_interval(cylinder_self_overlap(Digits{1, 1}, 1)) == RationalInterval(mpq_class(3, 5), mpq_class(2, 3)));
    const double ratio = std::log(25.0 / 24.0) / std::numbers::ln2 /
                         std::pow(std::log(10.0 / 9.0) / std::numbers::ln2, 4.0 / 3.0);
    CHECK(ratio == doctest::Approx(0.73).epsilon(0.01));
    CHECK(gm({1, 1, 1}) / std::pow(gm({1, 1}), 4.0 / 3.0) == doctest::Approx(ratio).epsilon(1e-12));
}

TEST_CASE("self-overlap words agree with the geometric intersection") {
    for (std::size_t n = 1; n <= 4; ++n) {
        std::uint64_t count = 1;
        for (std::size_t i = 0; i < n; ++i) count *= 8;
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            const Digits w = word_at(idx, n, 8);
            for (std::size_t k = 1; k <= n; ++k) {
                const Digits ov = cylinder_self_overlap(w, k);
                const auto geo = geometric_self_overlap(w, k);
                REQUIRE(ov.empty() == !geo.has_value());
                if (geo) CHECK(cylinder_interval(ov) == *geo);
            }
        }
    }
    // Sampled points: x lies in a ∩ T^{-k} a exactly when digits k+1 .. k+n repeat a.
    gen::Gen g(33);
    for (int t = 0; t < 300; ++t) {
        const Digits w = g.word(2, 4, 3);
        const std::size_t k = g.uniform(1, w.size());
        const RationalInterval a = cylinder_interval(w);
        const Digits ov = cylinder_self_overlap(w, k);
        for (int s = 0; s < 5; ++s) {
            const mpq_class x = g.inside(a.lo(), a.hi());
            const Digits e = rational_cf(x.get_num(), x.get_den());
            if (e.size() < k + w.size()) continue;
            const bool returns = std::equal(w.begin(), w.end(), e.begin() + static_cast<std::ptrdiff_t>(k));
            const bool in_ov = !ov.empty() && cylinder_interval(ov).contains(x);
            CHECK(returns == in_ov);
        }
    }
}

TEST_CASE("short-return report") {
    const ReturnBoundReport r2 = short_return_report(2, 8), r3 = short_return_report(3, 8), r4 = short_return_report(4, 8);
    CHECK(r2.mismatches == 0);
    CHECK(r3.mismatches == 0);
    CHECK(r4.mismatches == 0);
    CHECK(r2.worst_ratio <= r3.worst_ratio);
    CHECK(r3.worst_ratio <= r4.worst_ratio);
    CHECK(std::isfinite(r4.constant));
    CHECK(r2.worst_word == Digits{1, 1});
    CHECK(r2.worst_k == 1);
    CHECK(r2.worst_ratio == doctest::Approx(gm({1, 1, 1}) / std::pow(gm({1, 1}), 4.0 / 3.0)).epsilon(1e-12));
    CHECK(short_return_report(3, 8, 1).worst_word == short_return_report(3, 8, 3).worst_word);
    CHECK_THROWS_AS(short_return_report(1, 8), DomainError);
}

TEST_CASE("word enumeration") {
    CHECK(word_at(0, 3, 5) == Digits{1, 1, 1});
    CHECK(word_at(1, 3, 5) == Digits{1, 1, 2});
    CHECK(word_at(5, 3, 5) == Digits{1, 2, 1});
    CHECK(word_at(124, 3, 5) == Digits{5, 5, 5});
}
