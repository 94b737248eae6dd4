#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gmpl/errors.hpp"
#include "gmpl/transfer.hpp"

using namespace gmpl;

namespace {

std::vector<std::vector<double>> dense(const UlamWeights& W) {
    std::vector<std::vector<double>> d(W.size(), std::vector<double>(W.size(), 0.0));
    for (std::size_t j = 0; j < W.size(); ++j)
        for (std::size_t k = W.row_ptr()[j]; k < W.row_ptr()[j + 1]; ++k) d[j][W.cols()[k]] += W.values()[k];
    return d;
}

UlamGrid uniform_grid(std::int64_t cells) {
    std::vector<GridRational> b;
    for (std::int64_t i = 0; i <= cells; ++i) {
        const std::int64_t g = std::gcd(i, cells);
        b.push_back({i / g, cells / g});
    }
    return UlamGrid(b);
}

const UlamWeights& w4096() {
    static const UlamWeights W = build_ulam(make_grid(4096));
    return W;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(UlamGrid({{0, 1}}), DomainError);
    CHECK_THROWS_AS(UlamGrid({{0, 1}, {1, 2}}), DomainError);
    CHECK_THROWS_AS(UlamGrid({{0, 1}, {1, 2}, {1, 3}, {1, 1}}), DomainError);
    CHECK_THROWS_AS(UlamGrid({{0, 1}, {2, 4}, {1, 1}}), DomainError);
    CHECK(to_grid_rational(mpq_class(3, 12)) == GridRational{1, 4});
    CHECK_THROWS_AS(to_grid_rational(mpq_class(1, mpz_class(1) << 41)), DomainError);
    CHECK_THROWS_AS(make_grid(8), DomainError);

    const TargetFamily neg(NegControl{});
    const auto ivs = neg.intervals(50);
    const UlamGrid g = make_grid(1024, ivs);
    CHECK(g.size() <= 1024);
    long double total = 0;
    for (const long double m : g.masses()) total += m;
    CHECK(std::abs(static_cast<double>(total - 1)) <= 1e-12);
    const auto cells = g.cells_covering(ivs);
    long double covered = 0;
    for (const auto c : cells) covered += g.masses()[c];
    CHECK(static_cast<double>(covered) == doctest::Approx(static_cast<double>(target_measure(neg, 50))).epsilon(1e-12));
    const std::vector<RationalInterval> off{RationalInterval(mpq_class(1, 7919), mpq_class(1, 2))};
    CHECK_THROWS_AS(g.cells_covering(off), DomainError);
}

TEST_CASE("ulam entries against a branch-by-branch oracle") {
    const std::int64_t C = 8;
    const UlamGrid grid = uniform_grid(C);
    const auto d = dense(build_ulam(grid, kDefaultBranchTol, 1));
    for (std::int64_t j = 0; j < C; ++j) {
        const mpq_class lo(j, C), hi(j + 1, C);
        const long double mu_j = gauss_measure(lo, hi);
        std::vector<long double> joint(C, 0.0L);
        // Branches with 1/(k + lo) > 1/C reach the cells above the first.
        for (long k = 1; k <= C; ++k) {
            const mpq_class a = 1 / (k + hi), b = 1 / (k + lo);
            for (std::int64_t i = 1; i < C; ++i) {
                const mpq_class clo(i, C), chi(i + 1, C);
                const mpq_class x = std::max(a, clo), y = std::min(b, chi);
                if (x < y) joint[i] += gauss_measure(x, y);
            }
        }
        long double rest = mu_j;
        for (std::int64_t i = 1; i < C; ++i) rest -= joint[i];
        joint[0] = rest;
        for (std::int64_t i = 0; i < C; ++i)
            CHECK(d[j][i] == doctest::Approx(static_cast<double>(joint[i] / mu_j)).epsilon(1e-12));
    }
}

TEST_CASE("row-sum and adjoint invariants across grid sizes") {
    for (const std::size_t N : {1024u, 2048u, 4096u, 8192u, 16384u}) {
        CAPTURE(N);
        const UlamWeights W = N == 4096 ? w4096() : build_ulam(make_grid(N));
        CHECK(W.max_row_sum_error() <= 1e-10);
        CHECK(W.max_adjoint_error() <= 1e-10);
        for (const double v : W.values()) CHECK_UNARY(v >= 0.0);
    }
    CHECK_THROWS_AS(build_ulam(make_grid(64), 1e-9), NumericError);
    CHECK_THROWS_AS(build_ulam(make_grid(64), 0.0), DomainError);
}

TEST_CASE("assembly and products do not depend on thread count") {
    const UlamGrid g = make_grid(2048);
    const UlamWeights a = build_ulam(g, kDefaultBranchTol, 1), b = build_ulam(g, kDefaultBranchTol, 3);
    CHECK(a.values() == b.values());
    CHECK(a.cols() == b.cols());
    std::vector<double> x(a.size()), y1(a.size()), y3(a.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(static_cast<double>(i));
    a.apply(x, y1, 1);
    a.apply(x, y3, 3);
    CHECK(y1 == y3);
}

TEST_CASE("unperturbed spectrum") {
    const UlamWeights& W = w4096();
    const SpectralResult r = leading_eigen(W);
    CHECK(std::abs(r.lambda - 1) <= 1e-8);
    for (const double v : r.eigvec) CHECK(std::abs(v - 1) <= 1e-6);
    CHECK(r.residual <= 1e-12);
    CHECK(r.second < 0);
    CHECK(std::abs(r.second + 0.3037) <= 5e-3);
    CHECK(r.gap == doctest::Approx(std::abs(r.second)));
    CHECK_THROWS_AS(leading_eigen(W, 0.0), DomainError);
    try {
        const TargetFamily tail(TailSet{1.0});
        const AdaptedOperator op = adapted_operator(tail, 20, 256);
        leading_eigen(perturb(op.W, op.cells, PerturbMode::exponential(1.0)), 1e-14, 2);
        FAIL("expected EigenConvergenceError");
    } catch (const EigenConvergenceError& e) {
        CHECK(e.iterate().size() == 256);
        CHECK(e.residual() > 0);
    }
}

TEST_CASE("perturbations") {
    const TargetFamily tail(TailSet{1.0});
    const AdaptedOperator op = adapted_operator(tail, 50, 1024);
    const UlamWeights same = perturb(op.W, op.cells, PerturbMode::exponential(0.0));
    CHECK(same.values() == op.W.values());
    const UlamWeights surv = perturb(op.W, op.cells, PerturbMode::survival());
    const UlamWeights big = perturb(op.W, op.cells, PerturbMode::exponential(40.0));
    for (std::size_t k = 0; k < surv.values().size(); ++k)
        CHECK(std::abs(big.values()[k] - surv.values()[k]) <= 1e-17 + 1e-15 * op.W.values()[k]);
    for (std::size_t j = 0; j < surv.size(); ++j) {
        double s = 0;
        for (std::size_t k = surv.row_ptr()[j]; k < surv.row_ptr()[j + 1]; ++k) s += surv.values()[k];
        CHECK(s <= 1 + 1e-12);
    }
    CHECK_THROWS_AS(perturb(op.W, op.cells, PerturbMode::exponential(-1.0)), DomainError);
    const std::vector<std::size_t> bad{op.W.size()};
    CHECK_THROWS_AS(perturb(op.W, bad, PerturbMode::survival()), DomainError);

    double prev = 1.0;
    for (const double s : {0.1, 0.5, 1.0, 2.0, 8.0}) {
        const SpectralResult r = leading_eigen(perturb(op.W, op.cells, PerturbMode::exponential(s)), 1e-13, 5000, 0, false);
        CHECK(r.lambda < 1.0);
        CHECK(r.lambda <= prev);
        prev = r.lambda;
        for (const double v : r.eigvec) CHECK(v > 0.0);
    }
    const SpectralResult rs = leading_eigen(surv, 1e-13, 5000, 0, false);
    CHECK(rs.lambda <= prev);
}

TEST_CASE("lemma, escape and laplace records") {
    const TargetFamily tail(TailSet{1.0});
    const AdaptedOperator op = adapted_operator(tail, 200, 2048);
    const LemmaRecord a = lemma_ratio(op, 1e-3), b = lemma_ratio(op, 1e-2), c = lemma_ratio(op, 1.0);
    CHECK(std::abs(a.ratio - b.ratio) <= 0.05);
    CHECK(std::abs(c.ratio - 1) <= 0.1);
    CHECK(c.grid == op.grid.size());
    CHECK(c.mu_An == target_measure(tail, 200));
    const LemmaRecord e = escape_ratio(op);
    CHECK(std::isinf(e.s));
    CHECK(std::abs(e.ratio - 1) <= 0.05);
    CHECK(e.lambda <= c.lambda);
    CHECK_THROWS_AS(lemma_ratio(op, 0.0), DomainError);

    // Grid refinement moves λ_n by a small fraction of 1 - λ_n.
    const LemmaRecord fine = lemma_ratio(adapted_operator(tail, 200, 4096), 1.0);
    CHECK(std::abs(fine.lambda - c.lambda) <= 1e-2 * (1 - c.lambda));

    const LaplacePrediction z = poisson_laplace_predict(op, tail, 0.0);
    CHECK(z.lambda_pow_n == 1.0);
    CHECK(z.limit == 1.0);
    const LaplacePrediction p = poisson_laplace_predict(op, tail, 1.0);
    CHECK(p.lambda_pow_n == doctest::Approx(std::pow(c.lambda, 200)).epsilon(1e-10));
    CHECK(p.t == doctest::Approx(1 / std::log(2.0)));
    CHECK(p.rel_diff <= 0.05);
    CHECK(p.discrete_laplace > 0);
    CHECK(std::abs(p.discrete_laplace / p.lambda_pow_n - 1) <= 0.05);

    CHECK(limiting_intensity(TargetFamily(NegControl{})) == std::nullopt);
    CHECK_THROWS_AS(lemma_ratio(TargetFamily(TupleSet{2, 1.0}), 100, 1.0, 1024), DomainError);
}

TEST_CASE("operator overlaps") {
    const TargetFamily neg(NegControl{});
    const AdaptedOperator op = adapted_operator(neg, 20, 16384);
    CHECK(operator_overlap(op.W, op.cells, 0) == doctest::Approx(static_cast<double>(op.mu_An)).epsilon(1e-12));
    const double exact = static_cast<double>(overlap_measure(neg, 20, 1, OverlapMethod::exact).mass);
    CHECK(operator_overlap(op.W, op.cells, 1) == doctest::Approx(exact).epsilon(1e-3));
    const double mu = static_cast<double>(op.mu_An);
    CHECK(operator_overlap(op.W, op.cells, 30) == doctest::Approx(mu * mu).epsilon(1e-2));
}

TEST_CASE("mixing decay") {
    const std::vector<RationalInterval> ivs{cylinder_interval(Digits{1}),
                                            RationalInterval(mpq_class(0), mpq_class(1, 2))};
    const UlamGrid g = make_grid(2048, ivs);
    const UlamWeights W = build_ulam(g);
    const auto A = g.cells_covering(std::span(ivs).subspan(0, 1));
    const auto B = g.cells_covering(std::span(ivs).subspan(1, 1));
    const std::vector<std::uint64_t> gaps{0, 2, 4, 8, 16};
    const MixingEstimate m = mixing_decay(W, A, B, gaps, 1);
    CHECK(m.theta > 0);
    CHECK(m.theta < 1);
    REQUIRE(m.psi.size() == gaps.size());
    // gap 0: [1] ∩ T^{-1}(0, 1/2) = (2/3, 1), exact on a grid holding both sets.
    const double muA = static_cast<double>(interval_measure(ivs[0], MeasureLaw::gauss));
    const double muB = static_cast<double>(interval_measure(ivs[1], MeasureLaw::gauss));
    const double joint = static_cast<double>(gauss_measure(mpq_class(2, 3), mpq_class(1)));
    CHECK(m.psi[0] == doctest::Approx(std::abs(joint - muA * muB) / (muA * muB)).epsilon(1e-9));
    for (std::size_t k = 2; k < gaps.size(); ++k) CHECK(m.psi[k] <= m.psi[k - 1] * 1.05);
    CHECK_THROWS_AS(mixing_decay(W, {}, B, gaps), DomainError);
}
