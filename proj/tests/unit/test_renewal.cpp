#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gmpl/errors.hpp"
#include "gmpl/renewal.hpp"

using namespace gmpl;

namespace {

// Direct series for the default law, independent of the library.
struct Series {
    double f[60];
    double r[60];
    double mean = 0;
    Series() {
        const double e = std::numbers::e;
        double fact = 1, acc = 0;
        r[0] = 1;
        for (int i = 1; i < 60; ++i) {
            fact *= i;
            f[i] = 1.0 / (fact * (e - 1.0));
            acc += f[i];
            r[i] = 1.0 - acc;
        }
        for (int k = 0; k < 50; ++k) mean += r[k];
    }
};

}  // namespace

TEST_CASE("default chain matches the series oracle") {
    const Series s;
    const RenewalChain c = renewal_stationary(BranchLaw::factorial());
    const double e = std::numbers::e;
    CHECK(s.mean == doctest::Approx(e / (e - 1.0)).epsilon(1e-14));
    CHECK(c.pi()[0] == doctest::Approx(1.0 / s.mean).epsilon(1e-13));
    CHECK(c.pi()[0] == doctest::Approx(0.632121).epsilon(1e-6));
    CHECK(c.pi()[1] == doctest::Approx(c.pi()[0] * (1.0 - 1.0 / (e - 1.0))).epsilon(1e-12));
    CHECK(c.pi()[1] == doctest::Approx(0.264241).epsilon(1e-5));
    for (int i = 1; i < 15; ++i) CHECK(c.f()[i - 1] == doctest::Approx(s.f[i]).epsilon(1e-13));
}

TEST_CASE("truncated chain invariants") {
    for (const BranchLaw& law : {BranchLaw::factorial(), BranchLaw::factorial(3.5), BranchLaw::geometric(0.6),
                                 BranchLaw::power(4.5), BranchLaw::from_weights({0.5, 0.25, 0.25})}) {
        CAPTURE(law.describe());
        const RenewalChain c = renewal_stationary(law);
        double sf = 0, sp = 0;
        for (double x : c.f()) sf += x;
        for (double x : c.pi()) sp += x;
        CHECK(std::abs(sf + c.r().back() - 1.0) <= 1e-14);
        CHECK(std::abs(sp - 1.0) <= 1e-12);
        CHECK(c.tail_mass_bound() <= 1e-12);
        CHECK(stationarity_residual(c) <= 1e-10);
        CHECK(c.r()[0] == 1.0);
        CHECK(gibbs_markov_constant(c) >= 1.0);
    }
    CHECK(renewal_stationary(BranchLaw::factorial()).truncation() < 40);
}

TEST_CASE("renewal errors") {
    try {
        renewal_stationary(BranchLaw::power(2.0));
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()) == "no finite stationary measure");
    }
    CHECK_THROWS_AS(renewal_stationary(BranchLaw::power(1.5)), DomainError);
    CHECK_THROWS_AS(renewal_stationary(BranchLaw::geometric(1.0)), DomainError);
    CHECK_THROWS_AS(renewal_stationary(BranchLaw::from_weights({0.5, 0.4})), DomainError);
    CHECK_THROWS_AS(renewal_stationary(BranchLaw::factorial(), 1), DomainError);
    CHECK_THROWS_AS(renewal_stationary(BranchLaw::geometric(0.999), 100), NumericError);
}

TEST_CASE("tail masses") {
    const RenewalChain c = renewal_stationary(BranchLaw::factorial());
    CHECK(renewal_tail_mass(c, 1) == 1.0);
    CHECK(renewal_tail_mass(c, 2) == doctest::Approx(1.0 - c.pi()[0]).epsilon(1e-12));
    CHECK(renewal_tail_mass(c, 2) == doctest::Approx(0.367879).epsilon(1e-5));
    for (std::size_t K = 1; K + 1 < c.truncation(); ++K) CHECK(renewal_tail_mass(c, K + 1) < renewal_tail_mass(c, K));
    CHECK_THROWS_AS(renewal_tail_mass(c, 0), DomainError);
}

TEST_CASE("calibrated factorial law hits the requested tail") {
    const double c = calibrate_factorial_tail(3, 1.0 / 2000.0);
    CHECK(c > 0.0);
    CHECK(2000.0 * renewal_tail_mass(renewal_stationary(BranchLaw::factorial(c)), 3) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(calibrate_factorial_tail(1, 0.1), DomainError);
}

TEST_CASE("sample paths") {
    const RenewalChain c = renewal_stationary(BranchLaw::factorial());
    RandomStream a(StreamId{4, 0, 0}), b(StreamId{4, 0, 0});
    const auto p = renewal_sample_path(c, 1'000'000, a);
    CHECK(p == renewal_sample_path(c, 1'000'000, b));
    CHECK_THROWS_AS(renewal_sample_path(c, 0, a), DomainError);

    std::vector<double> from1(c.truncation() + 1, 0.0);
    double n1 = 0;
    for (std::size_t t = 0; t + 1 < p.size(); ++t) {
        if (p[t] >= 2) CHECK(p[t + 1] == p[t] - 1);
        if (p[t] == 1) {
            ++n1;
            from1[p[t + 1]] += 1;
        }
    }
    // Batch means for the frequency of state 1 (the path is correlated).
    const int B = 100;
    const std::size_t len = p.size() / B;
    double bm = 0, bm2 = 0;
    for (int b = 0; b < B; ++b) {
        double k = 0;
        for (std::size_t t = b * len; t < (b + 1) * len; ++t) k += p[t] == 1;
        k /= static_cast<double>(len);
        bm += k;
        bm2 += k * k;
    }
    bm /= B;
    const double se = std::sqrt((bm2 / B - bm * bm) / (B - 1));
    CHECK(std::abs(bm - c.pi()[0]) <= 3 * se);

    for (std::size_t i = 1; i <= 5; ++i) {
        const double fi = c.f()[i - 1];
        const double se_i = std::sqrt(fi * (1 - fi) / n1);
        CHECK(std::abs(from1[i] / n1 - fi) <= 3 * se_i);
    }
}
