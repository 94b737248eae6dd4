#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gmpl/diagnostics.hpp"
#include "gmpl/errors.hpp"
#include "gmpl/hit_stats.hpp"
#include "gmpl/renewal.hpp"
#include "gmpl/transfer.hpp"
#include "gmpl/version.hpp"

namespace gmpl::cli {

using json = nlohmann::ordered_json;

namespace {

const std::vector<ParamSpec> kFamily{
    {"family", "tail", "target family: tail, tuple, pattern or negcontrol"},
    {"theta", "1", "scale theta (tail, tuple)"},
    {"m", "2", "block length (tuple)"},
    {"exponent", "1/4", "pattern exponent p/q, j = floor(n^(p/q))"},
};

const ParamSpec kSeed{"seed", "1", "64-bit seed"};
const ParamSpec kTrials{"trials", "100000", "Monte Carlo trials"};
const ParamSpec kLaw{"law", "lebesgue", "initial law: lebesgue or gauss"};
const ParamSpec kOut{"out", "gmpl-out", "output directory"};

std::vector<ParamSpec> join(std::initializer_list<std::vector<ParamSpec>> parts) {
    std::vector<ParamSpec> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::vector<ExperimentInfo> make_table() {
    std::vector<ExperimentInfo> t;
    t.push_back({"doeblin", "doeblin-poisson-law", "hit counts of {a_1 > theta n} against Poisson(1/(theta log 2))",
                 {{"theta", "1", "scale theta"}, {"n", "1000", "orbit length and target index"}, kTrials, kSeed, kLaw,
                  kOut},
                 true});
    t.push_back({"tuples", "tuple-poisson-law", "hit counts of m-tuples of large digits against Poisson(1/(theta log 2))",
                 {{"m", "2", "tuple length"},
                  {"theta", "1", "scale theta"},
                  {"n", "4000", "orbit length and target index"},
                  kTrials,
                  kSeed,
                  kLaw,
                  kOut},
                 true});
    t.push_back({"pattern", "pattern-poisson-law", "hit counts of the cylinder [j, j], j = floor(n^(p/q))",
                 {{"exponent", "1/4", "exponent p/q"}, {"n", "10000", "orbit length and target index"}, kTrials, kSeed,
                  kLaw, kOut},
                 true});
    t.push_back({"negcontrol", "negative-control-assumption-b", "hit counts and overlap ratio of [1, n] u [n, 1]",
                 {{"n", "500", "orbit length and target index"}, kTrials, kSeed, kLaw, kOut},
                 true});
    t.push_back({"renewal", "renewal-chain-poisson-law", "visits of a stationary renewal chain to {x >= K}",
                 {{"branch_law", "factorial", "factorial, geometric or power"},
                  {"parameter", "1", "law parameter; auto calibrates the factorial law to n pi(x >= K) = 1"},
                  {"K", "6", "tail state"},
                  {"n", "2000", "orbit length"},
                  kTrials,
                  kSeed,
                  kOut},
                 true});
    t.push_back({"lemma-ratio", "perturbed-eigenvalue-ratio", "(1 - lambda_n) / ((1 - e^-s) mu(A_n)) on Ulam grids",
                 join({kFamily,
                       {{"n", "200,400,800", "target indices"},
                        {"s", "1", "perturbation s > 0"},
                        {"grid", "8192", "grid sizes"},
                        kOut}})});
    t.push_back({"escape", "escape-rate", "(1 - lambda_n) / mu(A_n) for the survival operator",
                 join({kFamily, {{"n", "200,400,800", "target indices"}, {"grid", "8192", "grid sizes"}, kOut}})});
    t.push_back({"laplace", "poisson-laplace-transform", "lambda_n^n against e^{-t(1-e^-s)} and the Monte Carlo transform",
                 join({kFamily,
                       {{"n", "800", "target index"},
                        {"s", "1", "perturbation s > 0"},
                        {"grid", "8192", "grid size"},
                        kTrials,
                        kSeed,
                        kLaw,
                        kOut}}),
                 true});
    t.push_back({"hitting-time", "exponential-hitting-time", "first hitting times scaled by mu(A_n) against Exp(1)",
                 join({kFamily, {{"n", "2000", "target index"}, kTrials, kSeed, kLaw, kOut}}), true});
    t.push_back({"spectrum", "unperturbed-spectrum", "Perron root, eigenvector and second eigenvalue of the Ulam operator",
                 {{"grid", "4096,8192", "grid sizes"}, kOut}});
    t.push_back({"mixing", "psi-mixing-decay", "correlation decay of a cylinder against an interval",
                 {{"grid", "8192", "grid size"},
                  {"gaps", "2..32", "gaps n"},
                  {"word", "1", "cylinder digits of A"},
                  {"b", "0,1/2", "interval B as lo,hi"},
                  kOut}});
    t.push_back({"shortret", "short-return-bound", "worst mu(a & T^-k a) / mu(a)^(1 + 1/(1+n)) over short words",
                 {{"max_len", "4", "longest word"}, {"max_digit", "20", "largest digit"}, kOut}});
    t.push_back({"renyi", "renyi-distortion", "range of v_a'(x) / mu(a) over short words",
                 {{"max_len", "4", "longest word"},
                  {"max_digit", "20", "largest digit"},
                  {"samples", "16", "sample points per cylinder"},
                  kOut}});
    t.push_back({"digits", "certified-digits", "continued fraction digits of a rational, an interval or a word",
                 {{"value", "", "rational p/q in (0, 1)"},
                  {"interval", "", "lo,hi: certified common prefix"},
                  {"word", "", "digits: cylinder and measures"},
                  {"count", "40", "digit cap for intervals"}},
                 false, false});
    t.push_back({"measure", "target-measure", "Gauss measure of A_n",
                 join({kFamily, {{"n", "100", "target index"}}}), false, false});
    return t;
}

// Shortest round-trip form.
std::string num(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{}", x);
}

json jnum(double x) { return std::isfinite(x) ? json(x) : json(num(x)); }

std::string word_str(const Digits& w) { return fmt::format("[{}]", fmt::join(w, ",")); }

std::string file_prefix(const ResolvedConfig& c) {
    std::string p = c.info().name;
    std::replace(p.begin(), p.end(), '-', '_');
    return p;
}

mpq_class parse_rational(std::string_view text, std::string_view what) {
    std::string s(text);
    std::erase(s, ' ');
    try {
        mpq_class q{s};
        if (q.get_den() == 0) throw std::invalid_argument("zero denominator");
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw ConfigError(fmt::format("{}: '{}' is not a rational p/q", what, text));
    }
}

Digits parse_word(std::string_view text, std::string_view what) {
    Digits w;
    std::size_t pos = 0;
    for (;;) {
        const auto comma = text.find(',', pos);
        const auto d = parse_u64(text.substr(pos, comma - pos), what);
        if (d == 0) throw ConfigError(fmt::format("{}: digits must be >= 1", what));
        w.push_back(d);
        if (comma == std::string_view::npos) return w;
        pos = comma + 1;
    }
}

RationalInterval parse_interval(std::string_view text, std::string_view what) {
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) throw ConfigError(fmt::format("{}: expected lo,hi", what));
    const mpq_class lo = parse_rational(text.substr(0, comma), what), hi = parse_rational(text.substr(comma + 1), what);
    if (!(lo < hi)) throw ConfigError(fmt::format("{}: need lo < hi", what));
    return RationalInterval(lo, hi);
}

TargetFamily pattern_of(const ResolvedConfig& c) {
    const mpq_class e = parse_rational(c.str("exponent"), "exponent");
    if (e <= 0 || !e.get_num().fits_sint_p() || !e.get_den().fits_sint_p())
        throw ConfigError("exponent must be a positive fraction");
    return TargetFamily(PatternSet{static_cast<int>(e.get_num().get_si()), static_cast<int>(e.get_den().get_si())});
}

TargetFamily family_of(const ResolvedConfig& c) {
    const std::string& f = c.str("family");
    if (f == "tail") return TargetFamily(TailSet{c.real("theta")});
    if (f == "tuple") {
        const std::uint64_t m = c.u64("m");
        if (m < 1 || m > 16) throw ConfigError("m must lie in 1..16");
        return TargetFamily(TupleSet{static_cast<int>(m), c.real("theta")});
    }
    if (f == "pattern") return pattern_of(c);
    if (f == "negcontrol") return TargetFamily(NegControl{});
    throw ConfigError(fmt::format("unknown family '{}'", f));
}

RunOptions run_options(const ResolvedConfig& c, const RunContext& ctx, bool with_law = true) {
    RunOptions o;
    o.trials = c.u64("trials");
    o.seed = c.u64("seed");
    o.threads = ctx.threads;
    if (with_law) o.law = parse_measure_law(c.str("law"));
    return o;
}

json config_json(const ResolvedConfig& c) {
    json j;
    j["experiment"] = c.info().name;
    for (const auto& [k, v] : c.entries()) j[k] = v;
    if (!c.info().seeded) j["seed"] = "none";
    j["tag"] = c.info().tag;
    j["version"] = kVersion;
    return j;
}

class Builder {
public:
    Builder(const ResolvedConfig& c) : c_(c), start_(std::chrono::steady_clock::now()) {}

    json results = json::object();
    json witnesses = json::object();

    void csv(std::string suffix, const std::string& header, const std::string& body, const std::string& extra = {}) {
        out_.files.push_back({file_prefix(c_) + suffix, csv_preamble(c_) + extra + header + "\n" + body});
    }

    Outcome finish() {
        const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        out_.report = json{{"config", config_json(c_)},
                           {"results", results},
                           {"witnesses", witnesses},
                           {"runtime_seconds", runtime}};
        if (c_.info().writes_files)
            out_.files.push_back({file_prefix(c_) + "_report.json", out_.report.dump(2) + "\n"});
        return std::move(out_);
    }

    std::string& text() { return out_.text; }

private:
    const ResolvedConfig& c_;
    std::chrono::steady_clock::time_point start_;
    Outcome out_;
};

// Histogram CSV against Poisson(t_ref) plus the shared summary numbers.
void histogram_section(Builder& b, const HitHistogram& h, double t_ref, const std::string& reference) {
    const auto pmf = [&](std::uint64_t k) { return poisson_pmf(t_ref, k); };
    const DistributionReport d = tv_distance(h, pmf);
    std::string body;
    const DistributionRow* worst = nullptr;
    for (const DistributionRow& r : d.rows) {
        body += fmt::format("{},{},{},{},{}\n", r.k, r.count, num(r.empirical), num(r.reference), num(r.std_err));
        if (!worst || std::abs(r.empirical - r.reference) > std::abs(worst->empirical - worst->reference)) worst = &r;
    }
    b.csv("_histogram.csv", "k,count,empirical_p,reference_p,std_err", body,
          fmt::format("# reference: poisson({}) [{}]\n", num(t_ref), reference));

    double mean = 0, m2 = 0;
    for (const auto& [k, cnt] : h.counts) {
        mean += static_cast<double>(k) * static_cast<double>(cnt);
        m2 += static_cast<double>(k) * static_cast<double>(k) * static_cast<double>(cnt);
    }
    mean /= static_cast<double>(h.trials);
    const double p0 = h.counts.count(0) ? static_cast<double>(h.counts.at(0)) / static_cast<double>(h.trials) : 0.0;
    b.results["n"] = h.n;
    b.results["trials"] = h.trials;
    b.results["aborted"] = h.aborted;
    b.results["law"] = h.law;
    b.results["t_hat"] = h.t_hat;
    b.results["t_reference"] = t_ref;
    b.results["reference"] = reference;
    b.results["tv"] = d.tv;
    b.results["reference_tail"] = d.reference_tail;
    b.results["tv_t_hat"] = tv_distance(h, [&](std::uint64_t k) { return poisson_pmf(h.t_hat, k); }).tv;
    b.results["p0_empirical"] = p0;
    b.results["p0_reference"] = poisson_pmf(t_ref, 0);
    b.results["mean"] = mean;
    b.results["variance"] = m2 / static_cast<double>(h.trials) - mean * mean;
    if (worst)
        b.witnesses["largest_deviation"] = {
            {"k", worst->k}, {"empirical_p", worst->empirical}, {"reference_p", worst->reference}};
}

Outcome gauss_histogram(const ResolvedConfig& c, const RunContext& ctx, const TargetFamily& fam) {
    Builder b(c);
    const std::uint64_t n = c.u64("n");
    const HitHistogram h = run_trials(fam, n, run_options(c, ctx));
    const auto limit = limiting_intensity(fam);
    b.results["family"] = fam.describe();
    b.results["threshold"] = fam.threshold(n);
    b.results["mu_An"] = static_cast<double>(target_measure(fam, n));
    histogram_section(b, h, limit ? *limit : h.t_hat, limit ? "limit intensity" : "n mu(A_n)");
    return b.finish();
}

Outcome run_doeblin(const ResolvedConfig& c, const RunContext& ctx) {
    return gauss_histogram(c, ctx, TargetFamily(TailSet{c.real("theta")}));
}

Outcome run_tuples(const ResolvedConfig& c, const RunContext& ctx) {
    const std::uint64_t m = c.u64("m");
    if (m < 1 || m > 16) throw ConfigError("m must lie in 1..16");
    return gauss_histogram(c, ctx, TargetFamily(TupleSet{static_cast<int>(m), c.real("theta")}));
}

Outcome run_pattern(const ResolvedConfig& c, const RunContext& ctx) {
    return gauss_histogram(c, ctx, pattern_of(c));
}

Outcome run_negcontrol(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    const TargetFamily fam{NegControl{}};
    const std::uint64_t n = c.u64("n");
    const HitHistogram h = run_trials(fam, n, run_options(c, ctx));
    b.results["family"] = fam.describe();
    b.results["mu_An"] = static_cast<double>(target_measure(fam, n));
    b.results["assumption_b_ratio"] = static_cast<double>(assumption_b_ratio(fam, n, 1));
    b.results["tail_ratio"] = static_cast<double>(assumption_b_ratio(TargetFamily(TailSet{1.0}), n, 1));
    histogram_section(b, h, h.t_hat, "n mu(A_n)");
    return b.finish();
}

BranchLaw branch_law_of(const ResolvedConfig& c, std::size_t K, std::uint64_t n) {
    const std::string& kind = c.str("branch_law");
    const std::string& par = c.str("parameter");
    if (par == "auto") {
        if (kind != "factorial") throw ConfigError("parameter = auto needs branch_law = factorial");
        return BranchLaw::factorial(calibrate_factorial_tail(K, 1.0 / static_cast<double>(n)));
    }
    const double p = parse_real(par, "parameter");
    if (kind == "factorial") return BranchLaw::factorial(p);
    if (kind == "geometric") return BranchLaw::geometric(p);
    if (kind == "power") return BranchLaw::power(p);
    throw ConfigError(fmt::format("unknown branch law '{}'", kind));
}

Outcome run_renewal(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    const std::size_t K = c.u64("K");
    const std::uint64_t n = c.u64("n");
    const BranchLaw law = branch_law_of(c, K, n);
    const RenewalChain chain = renewal_stationary(law);
    const HitHistogram h = run_renewal_trials(chain, K, n, run_options(c, ctx, false));
    b.results["branch_law"] = law.describe();
    b.results["parameter"] = law.parameter;
    b.results["truncation"] = chain.truncation();
    b.results["pi_tail"] = renewal_tail_mass(chain, K);
    b.results["stationarity_residual"] = stationarity_residual(chain);
    histogram_section(b, h, h.t_hat, "n pi(x >= K)");
    return b.finish();
}

std::string spectral_row(const LemmaRecord& r) {
    return fmt::format("{},{},{},{},{},{},{}\n", r.n, num(static_cast<double>(r.mu_An)), num(r.s), num(r.lambda),
                       num(r.ratio), r.grid, num(r.residual));
}

json record_json(const LemmaRecord& r) {
    return {{"n", r.n},           {"mu_An", static_cast<double>(r.mu_An)}, {"s", jnum(r.s)}, {"lambda", r.lambda},
            {"ratio", r.ratio},   {"grid", r.grid},                          {"residual", r.residual}};
}

Outcome ratio_experiment(const ResolvedConfig& c, const RunContext& ctx, bool survival) {
    Builder b(c);
    const TargetFamily fam = family_of(c);
    const auto ns = c.u64_list("n");
    const auto grids = c.u64_list("grid");
    const double s = survival ? HUGE_VAL : c.real("s");
    if (!survival && !(s > 0 && std::isfinite(s))) throw ConfigError("s must be finite and positive");
    std::string body;
    json records = json::array(), per_grid = json::array();
    std::vector<std::vector<double>> ratios;
    for (const std::uint64_t g : grids) {
        std::vector<double> row;
        for (const std::uint64_t n : ns) {
            const AdaptedOperator op = adapted_operator(fam, n, g, ctx.threads);
            const LemmaRecord r = survival ? escape_ratio(op, ctx.threads) : lemma_ratio(op, s, ctx.threads);
            body += spectral_row(r);
            records.push_back(record_json(r));
            row.push_back(r.ratio);
        }
        bool monotone = true;
        for (std::size_t i = 1; i < row.size(); ++i)
            if (std::abs(row[i] - 1) > std::abs(row[i - 1] - 1)) monotone = false;
        per_grid.push_back({{"grid", g},
                            {"deviation_non_increasing", monotone},
                            {"last_deviation", row.empty() ? 0.0 : std::abs(row.back() - 1)}});
        ratios.push_back(std::move(row));
    }
    double spread = 0;
    for (std::size_t i = 0; i < ns.size(); ++i)
        for (const auto& row : ratios) spread = std::max(spread, std::abs(row[i] - ratios.front()[i]));
    b.csv(".csv", "n,mu_An,s,lambda,ratio,grid,residual", body);
    b.results["family"] = fam.describe();
    b.results["records"] = records;
    b.results["grids"] = per_grid;
    b.results["grid_spread"] = spread;
    return b.finish();
}

Outcome run_lemma(const ResolvedConfig& c, const RunContext& ctx) { return ratio_experiment(c, ctx, false); }
Outcome run_escape(const ResolvedConfig& c, const RunContext& ctx) { return ratio_experiment(c, ctx, true); }

Outcome run_laplace(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    const TargetFamily fam = family_of(c);
    const std::uint64_t n = c.u64("n");
    const double s = c.real("s");
    if (!(s > 0 && std::isfinite(s))) throw ConfigError("s must be finite and positive");
    const LaplacePrediction p = poisson_laplace_predict(fam, n, s, c.u64("grid"), ctx.threads);
    const HitHistogram h = run_trials(fam, n, run_options(c, ctx));
    const LaplaceEstimate e = empirical_laplace(h, s);
    histogram_section(b, h, p.t, limiting_intensity(fam) ? "limit intensity" : "n mu(A_n)");
    b.results["family"] = fam.describe();
    b.results["s"] = s;
    b.results["lambda"] = p.lambda;
    b.results["lambda_pow_n"] = p.lambda_pow_n;
    b.results["limit"] = p.limit;
    b.results["rel_diff"] = p.rel_diff;
    b.results["discrete_laplace"] = p.discrete_laplace;
    b.results["mu_An"] = static_cast<double>(p.mu_An);
    b.results["mc_laplace"] = e.value;
    b.results["mc_std_err"] = e.std_err;
    b.results["z_lambda_pow_n"] = (p.lambda_pow_n - e.value) / e.std_err;
    return b.finish();
}

Outcome run_hitting(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    const TargetFamily fam = family_of(c);
    const HittingSample h = first_hit_times(fam, c.u64("n"), run_options(c, ctx));
    std::string body;
    std::uint64_t longest = 0, longest_trial = 0;
    for (std::size_t t = 0; t < h.tau.size(); ++t) {
        const double scaled = static_cast<double>(h.tau[t]) * h.mu_An;
        body += fmt::format("{},{},{},{}\n", t, h.tau[t], num(scaled), h.status[t]);
        if (h.status[t] == 0 && h.tau[t] > longest) {
            longest = h.tau[t];
            longest_trial = t;
        }
    }
    b.csv(".csv", "trial,tau,scaled_tau,censored", body,
          "# censored: 0 observed, 1 censored at the horizon, 2 aborted on precision\n");
    b.results["family"] = fam.describe();
    b.results["mu_An"] = h.mu_An;
    b.results["horizon"] = h.horizon;
    b.results["trials"] = h.tau.size();
    b.results["censored"] = h.censored;
    b.results["censored_fraction"] = static_cast<double>(h.censored) / static_cast<double>(h.tau.size());
    b.results["aborted"] = h.aborted;
    b.results["ks"] = h.ks;
    b.results["mean_scaled"] = h.mean_scaled;
    b.results["se_scaled"] = h.se_scaled;
    b.witnesses["longest_hit"] = {{"trial", longest_trial}, {"tau", longest}};
    return b.finish();
}

Outcome run_spectrum(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    json grids = json::array();
    double prev = NAN, drift = 0;
    for (const std::uint64_t g : c.u64_list("grid")) {
        const UlamWeights W = build_ulam(make_grid(g), kDefaultBranchTol, ctx.threads);
        const SpectralResult r = leading_eigen(W, 1e-12, 5000, ctx.threads);
        double flat = 0;
        for (double v : r.eigvec) flat = std::max(flat, std::abs(v - 1));
        grids.push_back({{"grid", W.size()},
                         {"nonzeros", W.nonzeros()},
                         {"lambda", r.lambda},
                         {"eigvec_deviation", flat},
                         {"row_sum_error", W.max_row_sum_error()},
                         {"adjoint_error", W.max_adjoint_error()},
                         {"second", r.second},
                         {"gap", r.gap},
                         {"residual", r.residual},
                         {"iterations", r.iterations}});
        if (!std::isnan(prev)) drift = std::max(drift, std::abs(r.second - prev));
        prev = r.second;
    }
    b.results["grids"] = grids;
    b.results["second_drift"] = drift;
    return b.finish();
}

Outcome run_mixing(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    const Digits w = parse_word(c.str("word"), "word");
    const std::vector<RationalInterval> ivs{cylinder_interval(w), parse_interval(c.str("b"), "b")};
    const UlamGrid g = make_grid(c.u64("grid"), ivs);
    const UlamWeights W = build_ulam(g, kDefaultBranchTol, ctx.threads);
    const auto A = g.cells_covering(std::span(ivs).subspan(0, 1));
    const auto B = g.cells_covering(std::span(ivs).subspan(1, 1));
    const auto gaps = c.u64_list("gaps");
    const MixingEstimate m = mixing_decay(W, A, B, gaps, w.size(), ctx.threads);
    json psi = json::array();
    for (std::size_t i = 0; i < m.gaps.size(); ++i) psi.push_back({{"gap", m.gaps[i]}, {"psi", m.psi[i]}});
    b.results["grid"] = g.size();
    b.results["K"] = m.K;
    b.results["theta"] = m.theta;
    b.results["fit_residual"] = m.fit_residual;
    b.results["fitted"] = m.fitted;
    b.results["psi"] = psi;
    return b.finish();
}

json bound_results(const ReturnBoundReport& r) {
    return {{"max_len", r.max_len},     {"max_digit", r.max_digit},   {"constant", r.constant},
            {"worst_ratio", r.worst_ratio}, {"min_ratio", r.min_ratio}, {"evaluated", r.evaluated},
            {"mismatches", r.mismatches}};
}

Outcome run_shortret(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    const ReturnBoundReport r = short_return_report(c.u64("max_len"), c.u64("max_digit"), ctx.threads);
    b.results = bound_results(r);
    b.results.erase("min_ratio");
    b.witnesses["worst"] = {{"word", word_str(r.worst_word)}, {"k", r.worst_k}, {"ratio", r.worst_ratio}};
    return b.finish();
}

Outcome run_renyi(const ResolvedConfig& c, const RunContext& ctx) {
    Builder b(c);
    const ReturnBoundReport r =
        renyi_report(c.u64("max_len"), c.u64("max_digit"), c.u64("samples"), ctx.threads);
    b.results = bound_results(r);
    b.results.erase("mismatches");
    b.witnesses["largest"] = {{"word", word_str(r.worst_word)}, {"sample", r.worst_k}, {"ratio", r.worst_ratio}};
    b.witnesses["smallest"] = {{"word", word_str(r.min_word)}, {"ratio", r.min_ratio}};
    return b.finish();
}

Outcome run_digits(const ResolvedConfig& c, const RunContext&) {
    Builder b(c);
    const std::string &value = c.str("value"), &interval = c.str("interval"), &word = c.str("word");
    if ((!value.empty()) + (!interval.empty()) + (!word.empty()) != 1)
        throw ConfigError("digits needs exactly one of value, interval, word");
    std::string& out = b.text();
    if (!value.empty()) {
        const mpq_class q = parse_rational(value, "value");
        const Digits d = rational_cf(q.get_num(), q.get_den());
        out += fmt::format("value: {}\ndigits: {}\n", q.get_str(), word_str(d));
        b.results["digits"] = d;
    } else if (!interval.empty()) {
        const RationalInterval iv = parse_interval(interval, "interval");
        const Digits d = certified_digits(iv, c.u64("count"));
        out += fmt::format("interval: ({}, {})\ncertified: {}\n", iv.lo().get_str(), iv.hi().get_str(), word_str(d));
        b.results["certified"] = d;
    } else {
        const Digits w = parse_word(word, "word");
        const RationalInterval iv = cylinder_interval(w);
        const auto cv = convergents(w);
        const double gm = static_cast<double>(interval_measure(iv, MeasureLaw::gauss));
        const double lm = static_cast<double>(interval_measure(iv, MeasureLaw::lebesgue));
        out += fmt::format("word: {}\nconvergent: {}/{}\ncylinder: ({}, {})\ngauss_measure: {}\nlebesgue_measure: {}\n",
                           word_str(w), cv.back().p.get_str(), cv.back().q.get_str(), iv.lo().get_str(),
                           iv.hi().get_str(), num(gm), num(lm));
        b.results["gauss_measure"] = gm;
        b.results["lebesgue_measure"] = lm;
    }
    return b.finish();
}

Outcome run_measure(const ResolvedConfig& c, const RunContext&) {
    Builder b(c);
    const TargetFamily fam = family_of(c);
    const std::uint64_t n = c.u64("n");
    const double mu = static_cast<double>(target_measure(fam, n));
    b.text() = fmt::format("family: {}\nn: {}\nthreshold: {}\nmu_An: {}\nn_mu_An: {}\n", fam.describe(), n,
                           fam.threshold(n), num(mu), num(static_cast<double>(n) * mu));
    b.results["mu_An"] = mu;
    b.results["n_mu_An"] = static_cast<double>(n) * mu;
    return b.finish();
}

using Runner = Outcome (*)(const ResolvedConfig&, const RunContext&);

Runner runner_of(const std::string& name) {
    static const std::vector<std::pair<std::string, Runner>> table{
        {"doeblin", run_doeblin},   {"tuples", run_tuples},     {"pattern", run_pattern},
        {"negcontrol", run_negcontrol}, {"renewal", run_renewal}, {"lemma-ratio", run_lemma},
        {"escape", run_escape},     {"laplace", run_laplace},   {"hitting-time", run_hitting},
        {"spectrum", run_spectrum}, {"mixing", run_mixing},     {"shortret", run_shortret},
        {"renyi", run_renyi},       {"digits", run_digits},     {"measure", run_measure},
    };
    for (const auto& [k, r] : table)
        if (k == name) return r;
    throw ConfigError(fmt::format("unknown experiment '{}'", name));
}

}  // namespace

const std::vector<ExperimentInfo>& experiments() {
    static const std::vector<ExperimentInfo> table = make_table();
    return table;
}

const ExperimentInfo* find_experiment(std::string_view name) {
    for (const ExperimentInfo& e : experiments())
        if (e.name == name) return &e;
    return nullptr;
}

std::string csv_preamble(const ResolvedConfig& cfg) {
    std::string out = fmt::format("# gmpl {}\n# tag: {}\n", kVersion, cfg.info().tag);
    if (cfg.info().seeded)
        out += fmt::format("# seed: {}\n", cfg.str("seed"));
    else
        out += "# seed: none (deterministic)\n";
    out += fmt::format("# config: experiment = {}\n", cfg.info().name);
    for (const auto& [k, v] : cfg.entries()) out += fmt::format("# config: {} = {}\n", k, v);
    return out;
}

Outcome run_experiment(const ResolvedConfig& cfg, const RunContext& ctx) {
    return runner_of(cfg.info().name)(cfg, ctx);
}

void write_outputs(const Outcome& outcome, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (outcome.files.empty()) return;
    fs::create_directories(dir);
    std::vector<fs::path> staged;
    try {
        for (const OutputFile& f : outcome.files) {
            fs::path tmp = dir / (f.name + ".partial");
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            staged.push_back(tmp);
            out << f.content;
            if (!out.flush()) throw std::runtime_error(fmt::format("cannot write '{}'", tmp.string()));
        }
    } catch (...) {
        std::error_code ec;
        for (const fs::path& p : staged) fs::remove(p, ec);
        throw;
    }
    for (std::size_t i = 0; i < staged.size(); ++i) fs::rename(staged[i], dir / outcome.files[i].name);
}

}  // namespace gmpl::cli
