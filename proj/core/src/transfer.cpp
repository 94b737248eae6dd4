#include "gmpl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gmpl/parallel.hpp"

namespace gmpl {

namespace {

using i128 = __int128;

constexpr std::int64_t kMaxDen = std::int64_t{1} << 40;
constexpr std::int64_t kBaseDen = std::int64_t{1} << 32;
constexpr long double kInvLn2 = 1.0L / std::numbers::ln2_v<long double>;

// Branch endpoints have denominators up to k q + p, far beyond int64 for the
// largest k near 0; numerators and denominators stay below 2^62.
struct Frac {
    i128 p;
    i128 q;
};

inline bool less(const Frac& a, const Frac& b) { return a.p * b.q < b.p * a.q; }
inline Frac frac(const GridRational& g) { return {g.p, g.q}; }

// μ((x, y)) = log1p((y - x) / (1 + x)) / log 2
inline long double mass_between(const Frac& x, const Frac& y) {
    const i128 num = y.p * x.q - x.p * y.q;
    const i128 den = y.q * (x.q + x.p);
    return std::log1p(static_cast<long double>(num) / static_cast<long double>(den)) * kInvLn2;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }

GridRational reduced(std::int64_t p, std::int64_t q) {
    const std::int64_t g = gcd64(p, q);
    return {p / g, q / g};
}

struct RowEntries {
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    std::uint64_t branches = 0;
    bool truncated = false;
};

class RowBuilder {
public:
    RowBuilder(const std::vector<GridRational>& b, const std::vector<long double>& masses, double branch_tol)
        : b_(b), masses_(masses), tol_(branch_tol) {}

    RowEntries build(std::size_t j) const {
        const GridRational lo = b_[j], hi = b_[j + 1];
        const long double row_mass = masses_[j];
        const i128 D = static_cast<i128>(hi.p) * lo.q - static_cast<i128>(lo.p) * hi.q;

        std::vector<std::pair<std::uint32_t, long double>> acc;  // descending columns
        auto add = [&acc](std::size_t c, long double m) {
            if (!acc.empty() && acc.back().first == c) acc.back().second += m;
            else acc.emplace_back(static_cast<std::uint32_t>(c), m);
        };

        RowEntries out;
        for (i128 k = 1;; ++out.branches) {
            const Frac u{hi.q, k * hi.q + hi.p};  // 1/(k + hi)
            const Frac v{lo.q, k * lo.q + lo.p};  // 1/(k + lo)
            // mass of all branches >= k
            const long double tail =
                std::log1p(static_cast<long double>(D) /
                           (static_cast<long double>(hi.q) * static_cast<long double>(v.q))) *
                kInvLn2;
            if (tail < tol_ * row_mass) {
                add(0, tail);
                out.truncated = true;
                break;
            }
            const std::size_t c_lo = cell_left_of(u);
            const std::size_t c_hi = cell_right_of(v);
            if (c_lo == c_hi) {
                const std::size_t c = c_lo;
                if (c == 0) {
                    add(0, tail);
                    break;
                }
                // last branch whose image still lies in cell c: 1/(k2 + hi) >= b_c
                const GridRational bc = b_[c];
                const i128 k2 = (static_cast<i128>(bc.q) * hi.q - static_cast<i128>(hi.p) * bc.p) /
                                (static_cast<i128>(bc.p) * hi.q);
                const i128 next_den = (k2 + 1) * hi.q + hi.p;
                const long double rm1 = static_cast<long double>(k2 - k + 1) * static_cast<long double>(D) /
                                        (static_cast<long double>(v.q) * static_cast<long double>(next_den));
                add(c, std::log1p(rm1) * kInvLn2);
                k = k2 + 1;
                continue;
            }
            add(c_hi, mass_between(frac(b_[c_hi]), v));
            for (std::size_t c = c_hi - 1; c > c_lo; --c) add(c, masses_[c]);
            add(c_lo, mass_between(u, frac(b_[c_lo + 1])));
            ++k;
        }

        long double total = 0;
        for (const auto& e : acc) total += e.second;
        if (std::abs(total / row_mass - 1.0L) > kRowSumTol)
            throw NumericError("build_ulam: row " + std::to_string(j) + " sums to " +
                               std::to_string(static_cast<double>(total / row_mass)));
        out.cols.reserve(acc.size());
        out.vals.reserve(acc.size());
        for (auto it = acc.rbegin(); it != acc.rend(); ++it) {
            out.cols.push_back(it->first);
            out.vals.push_back(static_cast<double>(it->second / row_mass));
        }
        return out;
    }

private:
    // largest c with b_c <= x
    std::size_t cell_left_of(const Frac& x) const {
        const auto it = std::upper_bound(b_.begin(), b_.end(), x,
                                         [](const Frac& v, const GridRational& g) { return less(v, frac(g)); });
        return static_cast<std::size_t>(it - b_.begin()) - 1;
    }
    // smallest c with b_{c+1} >= x
    std::size_t cell_right_of(const Frac& x) const {
        const auto it = std::lower_bound(b_.begin(), b_.end(), x,
                                         [](const GridRational& g, const Frac& v) { return less(frac(g), v); });
        return static_cast<std::size_t>(it - b_.begin()) - 1;
    }

    const std::vector<GridRational>& b_;
    const std::vector<long double>& masses_;
    double tol_;
};

double mu_pair(std::span<const double> mass, std::span<const double> x) {
    long double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(mass[i]) * x[i];
    return static_cast<double>(s);
}

}  // namespace

GridRational to_grid_rational(const mpq_class& in) {
    mpq_class x = in;
    x.canonicalize();
    if (sgn(x) < 0 || x > 1) throw DomainError("grid point outside [0, 1]");
    if (mpz_cmp_si(x.get_den_mpz_t(), kMaxDen) > 0)
        throw DomainError("grid point denominator exceeds 2^40: " + x.get_str());
    return {x.get_num().get_si(), x.get_den().get_si()};
}

UlamGrid::UlamGrid(std::vector<GridRational> boundaries) : b_(std::move(boundaries)) {
    if (b_.size() < 2) throw DomainError("UlamGrid needs at least one cell");
    if (!(b_.front() == GridRational{0, 1}) || !(b_.back() == GridRational{1, 1}))
        throw DomainError("UlamGrid must span [0, 1]");
    for (std::size_t c = 0; c + 1 < b_.size(); ++c) {
        const auto& g = b_[c + 1];
        if (g.q <= 0 || g.q > kMaxDen || std::gcd(g.p, g.q) != 1)
            throw DomainError("UlamGrid boundary not in lowest terms with denominator <= 2^40");
        if (!less(frac(b_[c]), frac(g))) throw DomainError("UlamGrid boundaries must increase strictly");
    }
    masses_.resize(size());
    long double total = 0;
    for (std::size_t c = 0; c < size(); ++c) {
        masses_[c] = mass_between(frac(b_[c]), frac(b_[c + 1]));
        total += masses_[c];
    }
    if (std::abs(total - 1.0L) > 1e-12L) throw NumericError("UlamGrid cell masses do not sum to 1");
}

std::optional<std::size_t> UlamGrid::boundary_index(const GridRational& x) const {
    const auto it = std::lower_bound(b_.begin(), b_.end(), x,
                                     [](const GridRational& a, const GridRational& v) { return less(frac(a), frac(v)); });
    if (it == b_.end() || !(*it == x)) return std::nullopt;
    return static_cast<std::size_t>(it - b_.begin());
}

std::vector<std::size_t> UlamGrid::cells_covering(std::span<const RationalInterval> ivs) const {
    std::vector<std::size_t> cells;
    for (const auto& iv : ivs) {
        const auto a = boundary_index(to_grid_rational(iv.lo()));
        const auto b = boundary_index(to_grid_rational(iv.hi()));
        if (!a || !b) throw DomainError("target endpoint is not a grid boundary");
        for (std::size_t c = *a; c < *b; ++c) cells.push_back(c);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

UlamGrid make_grid(std::size_t max_cells, std::span<const RationalInterval> required, const GridLayout& layout) {
    if (max_cells < 16) throw DomainError("make_grid: need at least 16 cells");
    if (!(layout.split > 0.0 && layout.split < 1.0) || !(layout.x_min_per_cell > 0.0))
        throw DomainError("make_grid: bad layout");

    std::vector<GridRational> extra;
    for (const auto& iv : required)
        for (const mpq_class* x : {&iv.lo(), &iv.hi()})
            if (sgn(*x) > 0 && *x < 1) extra.push_back(to_grid_rational(*x));

    const double N = static_cast<double>(max_cells - extra.size());
    const double s = layout.split;
    const double x_min = std::min(layout.x_min_per_cell / N, s / 4);
    // G geometric cells on (x_min, s), U uniform cells on (s, 1), widths
    // matched at s: s ln(s/x_min) / G = (1 - s) / U.
    const double a = s * std::log(s / x_min);
    const double G = std::floor(a * (N - 1) / (a + 1 - s));
    const double U = N - 1 - G;

    std::vector<GridRational> pts{{0, 1}};
    auto push = [&](double x) {
        const auto p = static_cast<std::int64_t>(std::llround(x * static_cast<double>(kBaseDen)));
        if (p > 0 && p < kBaseDen) pts.push_back(reduced(p, kBaseDen));
    };
    const double rho = std::pow(s / x_min, 1.0 / G);
    for (double g = 0; g < G; g += 1) push(x_min * std::pow(rho, g));
    for (double u = 0; u < U; u += 1) push(s + (1 - s) * u / U);
    pts.push_back({1, 1});
    pts.insert(pts.end(), extra.begin(), extra.end());

    auto lt = [](const GridRational& x, const GridRational& y) { return less(frac(x), frac(y)); };
    std::sort(pts.begin(), pts.end(), lt);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return UlamGrid(std::move(pts));
}

void UlamWeights::apply(std::span<const double> x, std::span<double> y, unsigned threads) const {
    const std::size_t n = size();
    auto row = [&](std::size_t j) {
        double s = 0;
        for (std::size_t e = row_ptr_[j]; e < row_ptr_[j + 1]; ++e) s += val_[e] * x[col_[e]];
        y[j] = s;
    };
    if (threads == 1) {
        for (std::size_t j = 0; j < n; ++j) row(j);
    } else {
        parallel_for(n, threads, row, 512);
    }
}

double UlamWeights::max_row_sum_error() const {
    double worst = 0;
    for (std::size_t j = 0; j < size(); ++j) {
        long double s = 0;
        for (std::size_t e = row_ptr_[j]; e < row_ptr_[j + 1]; ++e) s += val_[e];
        worst = std::max(worst, static_cast<double>(std::abs(s - 1.0L)));
    }
    return worst;
}

double UlamWeights::max_adjoint_error() const {
    std::vector<long double> col_mass(size(), 0.0L);
    for (std::size_t j = 0; j < size(); ++j)
        for (std::size_t e = row_ptr_[j]; e < row_ptr_[j + 1]; ++e)
            col_mass[col_[e]] += static_cast<long double>(val_[e]) * mass_[j];
    double worst = 0;
    for (std::size_t i = 0; i < size(); ++i)
        worst = std::max(worst, static_cast<double>(std::abs(col_mass[i] / mass_[i] - 1.0L)));
    return worst;
}

UlamWeights build_ulam(const UlamGrid& grid, double branch_tol, unsigned threads) {
    if (!(branch_tol > 0.0)) throw DomainError("build_ulam: branch_tol must be positive");
    if (branch_tol > kRowSumTol) throw NumericError("build_ulam: branch_tol too coarse to certify row sums within 1e-10");
    const std::size_t n = grid.size();
    RowBuilder builder(grid.boundaries(), grid.masses(), branch_tol);
    std::vector<RowEntries> rows(n);
    parallel_for(n, threads, [&](std::size_t j) { rows[j] = builder.build(j); }, 16);

    UlamWeights W;
    W.mass_.assign(grid.masses().begin(), grid.masses().end());
    std::size_t nnz = 0;
    for (const auto& r : rows) nnz += r.cols.size();
    W.col_.reserve(nnz);
    W.val_.reserve(nnz);
    W.row_ptr_.reserve(n + 1);
    for (auto& r : rows) {
        W.col_.insert(W.col_.end(), r.cols.begin(), r.cols.end());
        W.val_.insert(W.val_.end(), r.vals.begin(), r.vals.end());
        W.row_ptr_.push_back(W.col_.size());
        W.max_branches_ = std::max(W.max_branches_, r.branches);
        W.rows_truncated_ += r.truncated;
        r = RowEntries{};
    }
    return W;
}

struct PerturbAccess {
    static std::vector<double>& values(UlamWeights& W) { return W.val_; }
};

UlamWeights perturb(const UlamWeights& W, std::span<const std::size_t> cells, PerturbMode mode) {
    if (mode.kind == PerturbMode::Kind::exponential && !(mode.s >= 0.0))
        throw DomainError("perturb: s must be >= 0");
    std::vector<char> in(W.size(), 0);
    for (const std::size_t c : cells) {
        if (c >= W.size()) throw DomainError("perturb: cell index out of range");
        in[c] = 1;
    }
    const double factor = mode.kind == PerturbMode::Kind::survival ? 0.0 : std::exp(-mode.s);
    UlamWeights out = W;
    auto& val = PerturbAccess::values(out);
    const auto& col = W.cols();
    for (std::size_t e = 0; e < val.size(); ++e)
        if (in[col[e]]) val[e] *= factor;
    return out;
}

EigenConvergenceError::EigenConvergenceError(double lambda, double residual, std::vector<double> iterate)
    : NumericError("leading_eigen: no convergence (lambda=" + std::to_string(lambda) +
                   ", residual=" + std::to_string(residual) + ")"),
      lambda_(lambda), residual_(residual), iterate_(std::move(iterate)) {}

SpectralResult leading_eigen(const UlamWeights& W, double tol, int max_iter, unsigned threads, bool estimate_gap) {
    if (!(tol > 0.0)) throw DomainError("leading_eigen: tol must be positive");
    const std::size_t n = W.size();
    const auto& mass = W.masses();
    if (threads == 0) threads = default_threads();

    SpectralResult res;
    std::vector<double> x(n, 1.0), y(n);
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        W.apply(x, y, threads);
        const double lam = mu_pair(mass, y);
        if (!(lam > 0.0)) throw NumericError("leading_eigen: iterate collapsed to zero");
        double r = 0;
        for (std::size_t i = 0; i < n; ++i) r = std::max(r, std::abs(y[i] - lam * x[i]));
        res.lambda = lam;
        res.residual = r;
        res.iterations = it;
        if (std::abs(lam - prev) < tol && r < tol) {
            converged = true;
            break;
        }
        prev = lam;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / lam;
    }
    if (!converged) throw EigenConvergenceError(res.lambda, res.residual, x);
    res.eigvec = x;

    if (estimate_gap) {
        // Power iteration on the μ-complement of the Perron direction.
        std::vector<double> z(n);
        double pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            pos += mass[i];
            z[i] = pos - 0.5 * mass[i];  // a monotone, non-constant start
        }
        auto project = [&](std::vector<double>& v) {
            const double c = mu_pair(mass, v);
            for (std::size_t i = 0; i < n; ++i) v[i] -= c * x[i];
            long double nn = 0;
            for (std::size_t i = 0; i < n; ++i) nn += static_cast<long double>(mass[i]) * v[i] * v[i];
            const double norm = static_cast<double>(std::sqrt(nn));
            for (double& e : v) e /= norm;
        };
        project(z);
        double est = 0, prev_est = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 2000; ++it) {
            W.apply(z, y, threads);
            long double zy = 0;
            for (std::size_t i = 0; i < n; ++i) zy += static_cast<long double>(mass[i]) * z[i] * y[i];
            est = static_cast<double>(zy);
            z.swap(y);
            project(z);
            if (std::abs(est - prev_est) < 1e-12 * std::max(1.0, std::abs(est))) break;
            prev_est = est;
        }
        res.second = est;
        res.gap = std::abs(est) / res.lambda;
    }
    return res;
}

AdaptedOperator adapted_operator(const TargetFamily& fam, std::uint64_t n, std::size_t grid_size, unsigned threads) {
    const auto ivs = fam.intervals(n);
    UlamGrid grid = make_grid(grid_size, ivs);
    UlamWeights W = build_ulam(grid, kDefaultBranchTol, threads);
    auto cells = grid.cells_covering(ivs);
    return {std::move(grid), std::move(W), std::move(cells), n, target_measure(fam, n)};
}

LemmaRecord lemma_ratio(const AdaptedOperator& op, double s, unsigned threads) {
    if (!(s > 0.0)) throw DomainError("lemma_ratio: s must be positive");
    const auto spec = leading_eigen(perturb(op.W, op.cells, PerturbMode::exponential(s)), 1e-14, 5000, threads, false);
    const double ratio = (1.0 - spec.lambda) / (-std::expm1(-s) * static_cast<double>(op.mu_An));
    return {op.n, op.mu_An, s, spec.lambda, ratio, op.grid.size(), spec.residual};
}

LemmaRecord escape_ratio(const AdaptedOperator& op, unsigned threads) {
    const auto spec = leading_eigen(perturb(op.W, op.cells, PerturbMode::survival()), 1e-14, 5000, threads, false);
    const double ratio = (1.0 - spec.lambda) / static_cast<double>(op.mu_An);
    return {op.n, op.mu_An, std::numeric_limits<double>::infinity(), spec.lambda, ratio, op.grid.size(),
            spec.residual};
}

LemmaRecord lemma_ratio(const TargetFamily& fam, std::uint64_t n, double s, std::size_t grid_size, unsigned threads) {
    if (!(s > 0.0)) throw DomainError("lemma_ratio: s must be positive");
    return lemma_ratio(adapted_operator(fam, n, grid_size, threads), s, threads);
}

LemmaRecord escape_ratio(const TargetFamily& fam, std::uint64_t n, std::size_t grid_size, unsigned threads) {
    return escape_ratio(adapted_operator(fam, n, grid_size, threads), threads);
}

std::optional<double> limiting_intensity(const TargetFamily& fam) {
    const double inv_ln2 = 1.0 / std::numbers::ln2;
    if (const auto* t = std::get_if<TailSet>(&fam.variant())) return inv_ln2 / t->theta;
    if (const auto* t = std::get_if<TupleSet>(&fam.variant())) return inv_ln2 / t->theta;
    if (const auto* p = std::get_if<PatternSet>(&fam.variant()))
        if (4 * p->exponent_num == p->exponent_den) return inv_ln2;
    return std::nullopt;
}

LaplacePrediction poisson_laplace_predict(const AdaptedOperator& op, const TargetFamily& fam, double s,
                                          unsigned threads) {
    if (!(s >= 0.0)) throw DomainError("poisson_laplace_predict: s must be >= 0");
    LaplacePrediction out;
    out.mu_An = op.mu_An;
    out.t = limiting_intensity(fam).value_or(static_cast<double>(op.n) * static_cast<double>(op.mu_An));
    out.limit = std::exp(out.t * std::expm1(-s));
    if (s == 0.0) {
        out.lambda = 1.0;
        out.lambda_pow_n = 1.0;
        out.discrete_laplace = 1.0;
        return out;
    }
    const UlamWeights Wn = perturb(op.W, op.cells, PerturbMode::exponential(s));
    out.lambda = leading_eigen(Wn, 1e-14, 5000, threads, false).lambda;
    out.lambda_pow_n = std::exp(static_cast<double>(op.n) * std::log(out.lambda));
    out.rel_diff = std::abs(out.lambda_pow_n - out.limit) / out.limit;
    // ∫ L_n^n 1 dμ
    std::vector<double> v(Wn.size(), 1.0), w(Wn.size());
    for (std::uint64_t k = 0; k < op.n; ++k) {
        Wn.apply(v, w, threads == 0 ? default_threads() : threads);
        v.swap(w);
    }
    out.discrete_laplace = mu_pair(Wn.masses(), v);
    return out;
}

LaplacePrediction poisson_laplace_predict(const TargetFamily& fam, std::uint64_t n, double s, std::size_t grid_size,
                                          unsigned threads) {
    return poisson_laplace_predict(adapted_operator(fam, n, grid_size, threads), fam, s, threads);
}

double operator_overlap(const UlamWeights& W, std::span<const std::size_t> cellsA, std::uint64_t i, unsigned threads) {
    const std::size_t n = W.size();
    std::vector<double> v(n, 0.0), w(n);
    for (const std::size_t c : cellsA) {
        if (c >= n) throw DomainError("operator_overlap: cell index out of range");
        v[c] = 1.0;
    }
    for (std::uint64_t k = 0; k < i; ++k) {
        W.apply(v, w, threads);
        v.swap(w);
    }
    long double total = 0;
    for (const std::size_t c : cellsA) total += static_cast<long double>(W.masses()[c]) * v[c];
    return static_cast<double>(total);
}

MixingEstimate mixing_decay(const UlamWeights& W, std::span<const std::size_t> cellsA,
                            std::span<const std::size_t> cellsB, std::span<const std::uint64_t> gaps,
                            std::uint64_t offset, unsigned threads) {
    if (cellsA.empty() || cellsB.empty()) throw DomainError("mixing_decay: cell sets must be nonempty");
    const std::size_t n = W.size();
    const auto& mass = W.masses();
    long double muA = 0, muB = 0;
    std::vector<double> v(n, 0.0), w(n);
    for (const std::size_t c : cellsA) {
        if (c >= n) throw DomainError("mixing_decay: cell index out of range");
        v[c] = 1.0;
        muA += mass[c];
    }
    for (const std::size_t c : cellsB) {
        if (c >= n) throw DomainError("mixing_decay: cell index out of range");
        muB += mass[c];
    }
    // L^j (1_A - μ(A)) paired with 1_B gives the correlation directly; the
    // iterate is re-centred each step so rounding never feeds the constant mode.
    for (double& e : v) e -= static_cast<double>(muA);

    MixingEstimate est;
    std::vector<std::uint64_t> sorted(gaps.begin(), gaps.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::uint64_t step = 0;
    for (const std::uint64_t g : sorted) {
        for (; step < g + offset; ++step) {
            W.apply(v, w, threads);
            v.swap(w);
            const double c = mu_pair(mass, v);
            for (double& e : v) e -= c;
        }
        long double corr = 0;
        for (const std::size_t c : cellsB) corr += static_cast<long double>(mass[c]) * v[c];
        est.gaps.push_back(g);
        est.psi.push_back(static_cast<double>(std::abs(corr) / (muA * muB)));
    }

    // least squares on log ψ = log K + g log θ
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t k = 0; k < est.gaps.size(); ++k) {
        if (est.gaps[k] == 0 || est.psi[k] < 1e-13) continue;
        const double x = static_cast<double>(est.gaps[k]), y = std::log(est.psi[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    est.fitted = m;
    if (m < 2) throw NumericError("mixing_decay: fewer than two gaps above 1e-13 to fit");
    const double md = static_cast<double>(m);
    const double slope = (md * sxy - sx * sy) / (md * sxx - sx * sx);
    const double icept = (sy - slope * sx) / md;
    est.theta = std::exp(slope);
    est.K = std::exp(icept);
    for (std::size_t k = 0; k < est.gaps.size(); ++k) {
        if (est.gaps[k] == 0 || est.psi[k] < 1e-13) continue;
        const double fit = est.K * std::pow(est.theta, static_cast<double>(est.gaps[k]));
        est.fit_residual = std::max(est.fit_residual, std::abs(est.psi[k] / fit - 1.0));
    }
    return est;
}

}  // namespace gmpl
