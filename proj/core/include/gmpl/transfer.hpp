#pragma once

// Ulam discretization of the Gauss-map transfer operator, normalised so that
// L(1) = 1 in L^1(μ):
//
//   W[j][i] = μ(I_i ∩ T^{-1} I_j) / μ(I_j),    (L f)|_{I_j} ≈ Σ_i W[j][i] f_i.
//
// Entries are assembled branch by branch from exact rational endpoints and the
// closed-form Gauss measure; runs of consecutive branches that land in one
// cell are summed in closed form (the branch masses telescope).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gmpl/cf.hpp"
#include "gmpl/errors.hpp"
#include "gmpl/targets.hpp"

namespace gmpl {

inline constexpr double kDefaultBranchTol = 1e-14;
inline constexpr double kRowSumTol = 1e-10;

/// p/q in lowest terms, q > 0, q <= 2^40.
struct GridRational {
    std::int64_t p = 0;
    std::int64_t q = 1;
    bool operator==(const GridRational&) const = default;
};

GridRational to_grid_rational(const mpq_class& x);

/// Geometric cells from x_min up to `split`, uniform cells above, (0, x_min)
/// as the first cell. Widths are matched at the split point.
struct GridLayout {
    double x_min_per_cell = 1.0 / 64.0;  // x_min = x_min_per_cell / N
    double split = 0.001;
};

class UlamGrid {
public:
    explicit UlamGrid(std::vector<GridRational> boundaries);

    std::size_t size() const { return b_.size() - 1; }
    const std::vector<GridRational>& boundaries() const { return b_; }
    const std::vector<long double>& masses() const { return masses_; }

    /// Cells whose union is the given disjoint intervals. Every endpoint must
    /// be a grid boundary (DomainError otherwise).
    std::vector<std::size_t> cells_covering(std::span<const RationalInterval> ivs) const;

    /// Index k with boundary k equal to x, if any.
    std::optional<std::size_t> boundary_index(const GridRational& x) const;

private:
    std::vector<GridRational> b_;
    std::vector<long double> masses_;
};

/// Grid with at most `max_cells` cells whose boundaries include every
/// endpoint of `required`.
UlamGrid make_grid(std::size_t max_cells, std::span<const RationalInterval> required = {},
                   const GridLayout& layout = {});

/// Compressed sparse rows, row j = target cell, columns = source cells.
class UlamWeights {
public:
    std::size_t size() const { return row_ptr_.size() - 1; }
    std::size_t nonzeros() const { return val_.size(); }
    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::uint32_t>& cols() const { return col_; }
    const std::vector<double>& values() const { return val_; }
    /// μ(I_i) as doubles.
    const std::vector<double>& masses() const { return mass_; }

    /// y = W x.
    void apply(std::span<const double> x, std::span<double> y, unsigned threads = 1) const;

    /// max_j |Σ_i W[j][i] - 1|.
    double max_row_sum_error() const;
    /// max_i |Σ_j W[j][i] μ_j - μ_i| / μ_i.
    double max_adjoint_error() const;

    /// Largest branch count visited for a single row.
    std::uint64_t max_branches() const { return max_branches_; }
    /// Rows whose branch tail was lumped into the first cell under branch_tol.
    std::uint64_t rows_truncated() const { return rows_truncated_; }

private:
    friend UlamWeights build_ulam(const UlamGrid&, double, unsigned);
    friend struct PerturbAccess;

    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_;
    std::vector<double> val_;
    std::vector<double> mass_;
    std::uint64_t max_branches_ = 0;
    std::uint64_t rows_truncated_ = 0;
};

/// Assembles W. branch_tol is the relative row mass below which the remaining
/// branch tail is lumped into the cell adjacent to 0; values above 1e-10
/// cannot certify the row sums and are rejected with NumericError.
UlamWeights build_ulam(const UlamGrid& grid, double branch_tol = kDefaultBranchTol, unsigned threads = 0);

struct PerturbMode {
    enum class Kind { survival, exponential };
    Kind kind = Kind::exponential;
    double s = 0.0;

    static PerturbMode survival() { return {Kind::survival, std::numeric_limits<double>::infinity()}; }
    static PerturbMode exponential(double s) { return {Kind::exponential, s}; }
};

/// Scales every column i in `cells` by e^{-s} (exponential) or 0 (survival).
UlamWeights perturb(const UlamWeights& W, std::span<const std::size_t> cells, PerturbMode mode);

struct SpectralResult {
    double lambda = 0;
    /// Normalised so Σ_i eigvec_i μ_i = 1.
    std::vector<double> eigvec;
    /// |λ_2| / λ from deflated power iteration.
    double gap = 0;
    /// Signed estimate of the second eigenvalue.
    double second = 0;
    double residual = 0;
    int iterations = 0;
};

class EigenConvergenceError : public NumericError {
public:
    EigenConvergenceError(double lambda, double residual, std::vector<double> iterate);
    double lambda() const { return lambda_; }
    double residual() const { return residual_; }
    const std::vector<double>& iterate() const { return iterate_; }

private:
    double lambda_;
    double residual_;
    std::vector<double> iterate_;
};

/// Power iteration from the constant vector with μ-weighted normalisation.
SpectralResult leading_eigen(const UlamWeights& W, double tol = 1e-12, int max_iter = 5000, unsigned threads = 0,
                             bool estimate_gap = true);

/// Unperturbed operator on a grid adapted to A_n, with A_n's cells.
struct AdaptedOperator {
    UlamGrid grid;
    UlamWeights W;
    std::vector<std::size_t> cells;
    std::uint64_t n = 0;
    long double mu_An = 0;
};

AdaptedOperator adapted_operator(const TargetFamily& fam, std::uint64_t n, std::size_t grid_size,
                                 unsigned threads = 0);

struct LemmaRecord {
    std::uint64_t n = 0;
    long double mu_An = 0;
    double s = 0;  // +inf for survival
    double lambda = 0;
    double ratio = 0;
    std::size_t grid = 0;
    double residual = 0;
};

/// (1 - λ_n) / ((1 - e^{-s}) μ(A_n)) with λ_n the Perron root of the
/// exponential perturbation on a grid of at most grid_size cells adapted to
/// A_n.
LemmaRecord lemma_ratio(const TargetFamily& fam, std::uint64_t n, double s, std::size_t grid_size,
                        unsigned threads = 0);

LemmaRecord lemma_ratio(const AdaptedOperator& op, double s, unsigned threads = 0);

/// (1 - λ̃_n) / μ(A_n) with λ̃_n from the survival perturbation.
LemmaRecord escape_ratio(const TargetFamily& fam, std::uint64_t n, std::size_t grid_size, unsigned threads = 0);
LemmaRecord escape_ratio(const AdaptedOperator& op, unsigned threads = 0);

struct LaplacePrediction {
    double lambda = 0;
    double lambda_pow_n = 0;
    double t = 0;
    double limit = 0;  // e^{-t(1 - e^{-s})}
    double rel_diff = 0;
    /// ∫ W_n^n 1 dμ: the discrete Laplace transform including the projection
    /// prefactor.
    double discrete_laplace = 0;
    long double mu_An = 0;
};

/// lim n μ(A_n) when the family has one: 1/(θ log 2) for tail and tuple
/// sets, 1/log 2 for the n^{1/4} pattern; empty otherwise.
std::optional<double> limiting_intensity(const TargetFamily& fam);

/// λ_n^n against e^{-t(1-e^{-s})}; t is the family's limiting intensity, or
/// n μ(A_n) when it has none.
LaplacePrediction poisson_laplace_predict(const TargetFamily& fam, std::uint64_t n, double s, std::size_t grid_size,
                                          unsigned threads = 0);
LaplacePrediction poisson_laplace_predict(const AdaptedOperator& op, const TargetFamily& fam, double s,
                                          unsigned threads = 0);

/// Σ_{c in A} μ_c (W^i 1_A)_c.
double operator_overlap(const UlamWeights& W, std::span<const std::size_t> cellsA, std::uint64_t i,
                        unsigned threads = 1);

struct MixingEstimate {
    std::vector<std::uint64_t> gaps;
    std::vector<double> psi;
    double K = 0;
    double theta = 0;
    /// max |ψ_n / (K θ^n) - 1| over the fitted gaps.
    double fit_residual = 0;
    std::size_t fitted = 0;
};

/// ψ_n = |μ(A ∩ T^{-n-k} B) - μ(A) μ(B)| / (μ(A) μ(B)) for each gap n, with
/// k = offset (the cylinder length of A); log-linear least-squares fit on the
/// gaps >= 1 with ψ_n >= 1e-13.
MixingEstimate mixing_decay(const UlamWeights& W, std::span<const std::size_t> cellsA,
                            std::span<const std::size_t> cellsB, std::span<const std::uint64_t> gaps,
                            std::uint64_t offset = 1, unsigned threads = 1);

}  // namespace gmpl
