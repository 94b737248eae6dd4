// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number. Exit status 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <regex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "config.hpp"
#include "experiments.hpp"
#include "gmpl/targets.hpp"

using namespace gmpl;
using namespace gmpl::cli;

namespace {

const double kLimit = 1 / std::numbers::ln2;

struct Verdict {
    bool pass = true;
    std::vector<std::string> checks;
    std::vector<std::string> info;

    void require(bool ok, std::string what) {
        pass = pass && ok;
        checks.push_back(std::move(what));
    }
};

std::vector<unsigned> thread_counts() {
    std::set<unsigned> s{1, 4, std::max(1u, std::thread::hardware_concurrency())};
    return {s.begin(), s.end()};
}

struct DeterminismLog {
    std::string experiment;
    bool identical;
};
std::vector<DeterminismLog> g_determinism;

std::string strip_runtime(const std::string& s) {
    return std::regex_replace(s, std::regex(R"("runtime_seconds": [0-9.e+-]+)"), R"("runtime_seconds": 0)");
}

Outcome run_once(const std::string& name, const ConfigEntries& over, unsigned threads) {
    return run_experiment(resolve(*find_experiment(name), {}, over), RunContext{threads});
}

// Monte Carlo run at every thread count; the files must agree byte for byte.
Outcome mc(const std::string& name, const ConfigEntries& over) {
    std::optional<Outcome> first;
    bool same = true;
    for (unsigned t : thread_counts()) {
        Outcome o = run_once(name, over, t);
        if (!first) {
            first = std::move(o);
            continue;
        }
        same = same && o.files.size() == first->files.size();
        for (std::size_t i = 0; same && i < o.files.size(); ++i)
            same = o.files[i].name == first->files[i].name &&
                   strip_runtime(o.files[i].content) == strip_runtime(first->files[i].content);
    }
    g_determinism.push_back({name, same});
    return std::move(*first);
}

double res(const Outcome& o, const char* key) { return o.report["results"][key].get<double>(); }

std::string g(double x) { return fmt::format("{:.6g}", x); }

Verdict c1() {
    Verdict v;
    const Outcome o = mc("doeblin", {{"theta", "1"}, {"n", "1000"}, {"trials", "100000"}, {"seed", "7"}});
    const double p0_ref = std::exp(-kLimit);
    v.require(std::abs(res(o, "t_reference") - kLimit) <= 1e-12, "reference Poisson(1/log 2)");
    v.require(res(o, "tv") <= 0.02, fmt::format("TV={} <= 0.02", g(res(o, "tv"))));
    const double dp = std::abs(res(o, "p0_empirical") - p0_ref);
    v.require(dp <= 0.01, fmt::format("|P(0)-{}|={} <= 0.01", g(p0_ref), g(dp)));
    v.info.push_back(fmt::format("n mu(A_n)={}, aborted={}", g(res(o, "t_hat")), res(o, "aborted")));
    return v;
}

Verdict c2() {
    Verdict v;
    const Outcome o =
        mc("tuples", {{"m", "2"}, {"theta", "1"}, {"n", "4000"}, {"trials", "100000"}, {"seed", "7"}});
    v.require(std::abs(res(o, "t_reference") - kLimit) <= 1e-12, "reference Poisson(1/log 2)");
    v.require(res(o, "tv") <= 0.03, fmt::format("TV={} <= 0.03", g(res(o, "tv"))));
    v.info.push_back(fmt::format("n mu(A_n)={}, TV vs Poisson(n mu)={}", g(res(o, "t_hat")), g(res(o, "tv_t_hat"))));
    return v;
}

Verdict c3() {
    Verdict v;
    const Outcome o = mc("pattern", {{"exponent", "1/4"}, {"n", "10000"}, {"trials", "100000"}, {"seed", "7"}});
    v.require(o.report["results"]["threshold"] == 10, "j = 10");
    v.require(std::abs(res(o, "t_reference") - kLimit) <= 1e-12, "reference Poisson(1/log 2)");
    v.require(res(o, "tv") <= 0.03, fmt::format("TV={} <= 0.03", g(res(o, "tv"))));
    v.info.push_back(fmt::format("n mu(A_n)={} vs 1/log 2={}; TV vs Poisson(n mu)={}", g(res(o, "t_hat")), g(kLimit),
                                 g(res(o, "tv_t_hat"))));
    return v;
}

Verdict c4() {
    Verdict v;
    const Outcome o = mc("renewal", {{"branch_law", "factorial"},
                                     {"parameter", "auto"},
                                     {"K", "3"},
                                     {"n", "2000"},
                                     {"trials", "100000"},
                                     {"seed", "7"}});
    const double t = res(o, "t_hat");
    v.require(std::abs(t - 1) <= 0.05, fmt::format("n pi(tail)={} within 5% of 1", g(t)));
    v.require(res(o, "tv") <= 0.03, fmt::format("TV={} <= 0.03 vs Poisson(t_hat)", g(res(o, "tv"))));
    v.info.push_back(fmt::format("law {}", o.report["results"]["branch_law"].get<std::string>()));
    const Outcome d = run_once("renewal", {{"K", "6"}, {"n", "2000"}, {"trials", "100000"}, {"seed", "7"}}, 0);
    v.info.push_back(fmt::format("default law, K=6: n pi(tail)={}, TV vs Poisson(t_hat)={}", g(res(d, "t_hat")),
                                 g(res(d, "tv"))));
    return v;
}

Verdict c5() {
    Verdict v;
    const Outcome o = run_once("lemma-ratio", {{"family", "tail"},
                                               {"theta", "1"},
                                               {"s", "1"},
                                               {"n", "200,400,800"},
                                               {"grid", "8192,16384"}},
                               0);
    std::vector<double> dev8192;
    std::string line;
    for (const auto& r : o.report["results"]["records"]) {
        if (r["grid"].get<std::size_t>() <= 8192) dev8192.push_back(std::abs(r["ratio"].get<double>() - 1));
        line += fmt::format(" n={},N={}: {}", r["n"].get<int>(), r["grid"].get<std::size_t>(),
                            g(r["ratio"].get<double>()));
    }
    v.require(dev8192.size() == 3, "three records on the 8192 grid");
    bool mono = dev8192.size() == 3 && dev8192[1] <= dev8192[0] && dev8192[2] <= dev8192[1];
    v.require(mono, "|ratio-1| non-increasing in n");
    v.require(!dev8192.empty() && dev8192.back() <= 0.1,
              fmt::format("|ratio-1|={} <= 0.1 at n=800", g(dev8192.empty() ? NAN : dev8192.back())));
    v.require(res(o, "grid_spread") <= 0.01, fmt::format("8192 vs 16384 spread={} <= 0.01", g(res(o, "grid_spread"))));
    v.info.push_back("ratios" + line);
    return v;
}

Verdict c6() {
    Verdict v;
    const Outcome o = run_once("escape", {{"family", "tail"}, {"theta", "1"}, {"n", "800"}, {"grid", "8192"}}, 0);
    const double r = o.report["results"]["records"][0]["ratio"].get<double>();
    v.require(std::abs(r - 1) <= 0.05, fmt::format("|ratio-1|={} <= 0.05 at n=800", g(std::abs(r - 1))));
    return v;
}

Verdict c7() {
    Verdict v;
    const Outcome o = mc("laplace", {{"family", "tail"},
                                     {"theta", "1"},
                                     {"n", "800"},
                                     {"s", "1"},
                                     {"grid", "8192"},
                                     {"trials", "100000"},
                                     {"seed", "7"}});
    const double limit = std::exp(-kLimit * (1 - std::exp(-1.0)));
    const double lpn = res(o, "lambda_pow_n");
    v.require(std::abs(res(o, "limit") - limit) <= 1e-12, "limit e^{-t(1-e^{-s})}, t = 1/log 2");
    const double rel = std::abs(lpn - limit) / limit;
    v.require(rel <= 0.05, fmt::format("relative diff={} <= 0.05", g(rel)));
    const double z = (lpn - res(o, "mc_laplace")) / res(o, "mc_std_err");
    v.require(std::abs(z) <= 2, fmt::format("lambda^n={} vs MC {} +- {}: |z|={} <= 2", g(lpn), g(res(o, "mc_laplace")),
                                            g(res(o, "mc_std_err")), g(std::abs(z))));
    return v;
}

Verdict c8() {
    Verdict v;
    const Outcome o = run_once("spectrum", {{"grid", "4096,8192"}}, 0);
    const std::vector<double> pinned{-0.304013, -0.303313};
    std::size_t i = 0;
    for (const auto& r : o.report["results"]["grids"]) {
        const auto N = r["grid"].get<std::size_t>();
        const double lam = r["lambda"].get<double>(), dev = r["eigvec_deviation"].get<double>();
        const double row = r["row_sum_error"].get<double>(), adj = r["adjoint_error"].get<double>();
        const double second = r["second"].get<double>();
        v.require(std::abs(lam - 1) <= 1e-8, fmt::format("N={}: |lambda-1|={} <= 1e-8", N, g(std::abs(lam - 1))));
        v.require(dev <= 1e-6, fmt::format("eigvec dev={} <= 1e-6", g(dev)));
        v.require(row <= 1e-10 && adj <= 1e-10, fmt::format("row={} adjoint={} <= 1e-10", g(row), g(adj)));
        v.require(i < pinned.size() && std::abs(second - pinned[i]) <= 1e-4,
                  fmt::format("lambda_2={} pinned {}", g(second), g(pinned[std::min(i, pinned.size() - 1)])));
        ++i;
    }
    v.require(res(o, "second_drift") <= 5e-3, fmt::format("lambda_2 drift={} <= 5e-3", g(res(o, "second_drift"))));
    return v;
}

Verdict c9() {
    Verdict v;
    const Outcome o = mc("hitting-time", {{"family", "tail"},
                                          {"theta", "1"},
                                          {"n", "2000"},
                                          {"trials", "100000"},
                                          {"seed", "7"}});
    v.require(res(o, "ks") <= 0.02, fmt::format("KS={} <= 0.02", g(res(o, "ks"))));
    v.require(res(o, "censored_fraction") <= 1e-6,
              fmt::format("censored fraction={} <= 1e-6", g(res(o, "censored_fraction"))));
    v.info.push_back(fmt::format("mean scaled tau={} +- {}", g(res(o, "mean_scaled")), g(res(o, "se_scaled"))));
    return v;
}

Verdict c10() {
    Verdict v;
    const Outcome o = run_once("shortret", {{"max_len", "4"}, {"max_digit", "20"}}, 0);
    const auto& w = o.report["witnesses"]["worst"];
    v.require(std::isfinite(res(o, "constant")), fmt::format("M_1={} finite", g(res(o, "constant"))));
    v.require(o.report["results"]["mismatches"] == 0, "0 mismatches against interval intersection");
    v.require(o.report["results"]["evaluated"] == 20 + 2 * 400 + 3 * 8000 + 4 * 160000,
              fmt::format("{} (word, k) pairs", o.report["results"]["evaluated"].get<std::uint64_t>()));
    v.require(w["word"] == "[1,1,1,1]" && w["k"] == 1 && std::abs(w["ratio"].get<double>() / 0.818517 - 1) <= 1e-6,
              fmt::format("witness {} k={} ratio={} pinned [1,1,1,1] k=1 0.818517", w["word"].get<std::string>(),
                          w["k"].get<int>(), g(w["ratio"].get<double>())));
    return v;
}

Verdict c11() {
    Verdict v;
    const TargetFamily neg{NegControl{}}, tail{TailSet{1.0}};
    double lo = 1e9;
    std::uint64_t argmin = 0, first_small = 0;
    for (std::uint64_t n = 10; n <= 1000; ++n) {
        const double r = static_cast<double>(assumption_b_ratio(neg, n, 1));
        if (r < lo) {
            lo = r;
            argmin = n;
        }
        if (!first_small && static_cast<double>(assumption_b_ratio(tail, n, 1)) < 0.005) first_small = n;
    }
    v.require(lo >= 0.02, fmt::format("negcontrol min ratio={} (n={}) >= 0.02 over 10..1000", g(lo), argmin));
    const double t = static_cast<double>(assumption_b_ratio(tail, 1000, 1));
    v.require(t < 0.005, fmt::format("tail ratio={} < 0.005 at n=1000", g(t)));
    v.info.push_back(fmt::format("tail ratio first below 0.005 at n={}", first_small));
    return v;
}

Verdict c12() {
    Verdict v;
    const Outcome o = run_once("mixing", {{"grid", "8192"}, {"gaps", "2..32"}, {"word", "1"}, {"b", "0,1/2"}}, 0);
    v.require(res(o, "theta") < 1, fmt::format("theta={} < 1", g(res(o, "theta"))));
    v.require(res(o, "fit_residual") <= 0.05, fmt::format("fit residual={} <= 0.05", g(res(o, "fit_residual"))));
    v.info.push_back(fmt::format("K={}, fitted gaps={}", g(res(o, "K")), o.report["results"]["fitted"].get<int>()));
    return v;
}

Verdict c13() {
    Verdict v;
    if (g_determinism.empty()) mc("doeblin", {{"theta", "1"}, {"n", "1000"}, {"trials", "100000"}, {"seed", "7"}});
    std::string counts;
    for (unsigned t : thread_counts()) counts += fmt::format("{}{}", counts.empty() ? "" : ",", t);
    for (const auto& d : g_determinism)
        v.require(d.identical, fmt::format("{} identical at threads {{{}}}", d.experiment, counts));
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"doeblin-poisson-law", c1},     {"tuple-poisson-law", c2},    {"pattern-poisson-law", c3},
        {"renewal-chain-poisson-law", c4}, {"perturbed-eigenvalue-ratio", c5}, {"escape-rate", c6},
        {"poisson-laplace-transform", c7}, {"unperturbed-spectrum", c8}, {"exponential-hitting-time", c9},
        {"short-return-bound", c10},     {"negative-control", c11},    {"psi-mixing-decay", c12},
        {"determinism", c13},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0, ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.require(false, fmt::format("threw: {}", e.what()));
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ++ran;
        failed += !v.pass;
        std::string checks;
        for (const auto& c : v.checks) checks += (checks.empty() ? "" : "; ") + c;
        std::cout << fmt::format("{} {:>2} {:<27} {} [{:.1f}s]\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first,
                                 checks, secs);
        for (const auto& s : v.info) std::cout << "        info: " << s << "\n";
        std::cout.flush();
    }
    std::cout << fmt::format("{}/{} criteria passed\n", ran - failed, ran);
    return failed ? 1 : 0;
}
