#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsc/dense.hpp"
#include "rsc/flops.hpp"
#include "rsc/rng.hpp"
#include "rsc/sparse.hpp"

namespace rsc {

/// Column-row pair statistics of the product a * b. Pair i couples column i of
/// a with row i of b.
struct PairStats {
    std::vector<double> products;     // ‖a[:,i]‖₂ · ‖b[i,:]‖₂
    std::vector<double> probs;        // products normalized to sum 1 (uniform if all zero)
    std::vector<Index> nnz_per_col;   // stored entries in column i of a
    double total_norm_product = 0.0;  // ‖a‖_F · ‖b‖_F

    Index size() const noexcept { return products.size(); }
    bool degenerate() const noexcept;  // every product is zero
};

PairStats pair_stats(const CsrMatrix& a, const DenseMatrix& b);

/// Builds stats from precomputed column norms / row norms / nnz of the sparse side.
PairStats pair_stats_from_norms(std::span<const double> col_norms, std::span<const double> row_norms,
                                std::span<const Index> nnz_per_col, double total_norm_product);

struct TopKSelection {
    std::vector<Index> indices;  // ascending
    Index k = 0;
    std::int64_t source_step = -1;
};

/// Pair indices ordered by descending product, ties by ascending index.
std::vector<Index> rank_pairs(std::span<const double> products);

/// The k pairs with the largest products (ties → lower index), returned ascending.
/// Throws ShapeError unless 1 <= k <= n.
TopKSelection topk_indices(std::span<const double> products, Index k, std::int64_t source_step = -1);
TopKSelection topk_indices(const PairStats& stats, Index k, std::int64_t source_step = -1);

/// Σ_{i∈sel} a[:,i] b[i,:] computed as spmm over the column slice. Counts
/// (Σ_{i∈sel} #nnz_i) * b.cols multiply-adds.
DenseMatrix approx_spmm_topk(const CsrMatrix& a, const DenseMatrix& b, const TopKSelection& sel,
                             FlopCounter* flops = nullptr);

/// Same product over an already-sliced operator.
DenseMatrix approx_spmm_sliced(const ColumnSlice& slice, const DenseMatrix& b, FlopCounter* flops = nullptr);

/// Unbiased estimator Σ_t a[:,i_t] b[i_t,:] / (k p_{i_t}) with k i.i.d. draws from
/// stats.probs. Throws NumericError if every pair product is zero.
DenseMatrix approx_spmm_sampled(const CsrMatrix& a, const DenseMatrix& b, const PairStats& stats, Index k,
                                Rng& rng, FlopCounter* flops = nullptr);
DenseMatrix approx_spmm_sampled(const CsrMatrix& a, const DenseMatrix& b, Index k, Rng& rng,
                                FlopCounter* flops = nullptr);

/// ‖a b − approx‖_F / (‖a‖_F ‖b‖_F). 0 when both numerator and denominator vanish;
/// NumericError when only the denominator does.
double relative_error(const CsrMatrix& a, const DenseMatrix& b, const DenseMatrix& approx);

struct ErrorBoundReport {
    double epsilon = 0.0;
    double stable_rank_a = 0.0;
    double stable_rank_b = 0.0;
    Index k = 0;
    int trials = 0;
    double mean_error = 0.0;  // mean ‖ab − approx‖_F on the normalized operands
    double threshold = 0.0;   // 2ε
    bool passed = false;
};

/// Empirical check of the column-row sampling bound
///   k ≥ ε⁻² (srank(a) + srank(b)) ln(a.rows + b.cols)  ⇒  E‖ab − approx‖_F ≤ 2ε
/// with a and b rescaled to unit Frobenius norm first.
ErrorBoundReport error_bound_check(const CsrMatrix& a, const DenseMatrix& b, double epsilon, Rng& rng,
                                   int trials = 200);

/// Smallest k satisfying the bound above (at least 1).
Index error_bound_samples(double stable_rank_a, double stable_rank_b, Index n_rows, Index n_cols,
                          double epsilon);

}  // namespace rsc
