#include <benchmark/benchmark.h>

#include "gmpl/cf.hpp"
#include "gmpl/hit_stats.hpp"
#include "gmpl/rng.hpp"
#include "gmpl/transfer.hpp"

using namespace gmpl;

namespace {

// Certified digits of a random dyadic interval of width 2^-bits.
void BM_CertifiedDigits(benchmark::State& state) {
    const auto bits = static_cast<unsigned>(state.range(0));
    std::uint64_t trial = 0;
    std::size_t digits = 0;
    for (auto _ : state) {
        DyadicPoint p(StreamId{1, trial++, 0}, MeasureLaw::lebesgue);
        const Digits d = p.digits(bits, 1'000'000);
        digits += d.size();
        benchmark::DoNotOptimize(d.data());
    }
    state.counters["digits/s"] = benchmark::Counter(static_cast<double>(digits), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_CertifiedDigits)->Arg(1024)->Arg(4096)->Arg(16384)->Unit(benchmark::kMicrosecond);

void BM_CertifiedDigitsExact(benchmark::State& state) {
    const auto bits = static_cast<unsigned>(state.range(0));
    std::uint64_t trial = 0;
    for (auto _ : state) {
        DyadicPoint p(StreamId{1, trial++, 0}, MeasureLaw::lebesgue);
        const Digits d = certified_digits_exact(p.interval(bits), 1'000'000);
        benchmark::DoNotOptimize(d.data());
    }
}
BENCHMARK(BM_CertifiedDigitsExact)->Arg(1024)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_UlamBuild(benchmark::State& state) {
    const UlamGrid grid = make_grid(static_cast<std::size_t>(state.range(0)));
    std::size_t nnz = 0;
    for (auto _ : state) {
        const UlamWeights W = build_ulam(grid, kDefaultBranchTol, 1);
        nnz = W.nonzeros();
        benchmark::DoNotOptimize(nnz);
    }
    state.counters["nonzeros"] = static_cast<double>(nnz);
}
BENCHMARK(BM_UlamBuild)->Arg(1024)->Arg(4096)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_PowerIteration(benchmark::State& state) {
    const std::vector<RationalInterval> target{RationalInterval(mpq_class(0), mpq_class(1, 401))};
    const UlamGrid grid = make_grid(static_cast<std::size_t>(state.range(0)), target);
    const UlamWeights W = build_ulam(grid, kDefaultBranchTol, 1);
    const auto cells = grid.cells_covering(target);
    const UlamWeights P = perturb(W, cells, PerturbMode::exponential(1.0));
    for (auto _ : state) {
        const SpectralResult r = leading_eigen(P, 1e-12, 5000, 1, false);
        benchmark::DoNotOptimize(r.lambda);
        state.counters["iterations"] = r.iterations;
    }
}
BENCHMARK(BM_PowerIteration)->Arg(4096)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_SpMV(benchmark::State& state) {
    const UlamWeights W = build_ulam(make_grid(static_cast<std::size_t>(state.range(0))), kDefaultBranchTol, 1);
    std::vector<double> x(W.size(), 1.0), y(W.size());
    for (auto _ : state) {
        W.apply(x, y, 1);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * W.nonzeros()));
}
BENCHMARK(BM_SpMV)->Arg(8192);

// Single-threaded Monte Carlo trials (digits + hit count) for the tail family.
void BM_MonteCarloTrials(benchmark::State& state) {
    const TargetFamily tail(TailSet{1.0});
    RunOptions o;
    o.trials = 256;
    o.threads = 1;
    for (auto _ : state) {
        const HitHistogram h = run_trials(tail, static_cast<std::uint64_t>(state.range(0)), o);
        benchmark::DoNotOptimize(h.trials);
        ++o.seed;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * o.trials));
}
BENCHMARK(BM_MonteCarloTrials)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
