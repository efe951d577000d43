#include "rsc/approx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rsc/errors.hpp"

namespace rsc {

bool PairStats::degenerate() const noexcept {
    return std::all_of(products.begin(), products.end(), [](double p) { return p == 0.0; });
}

PairStats pair_stats_from_norms(std::span<const double> col_norms, std::span<const double> row_norms,
                                std::span<const Index> nnz_per_col, double total_norm_product) {
    if (col_norms.size() != row_norms.size() || col_norms.size() != nnz_per_col.size())
        throw ShapeError("pair_stats: column and row statistics differ in length");
    PairStats stats;
    const Index n = col_norms.size();
    stats.products.resize(n);
    stats.probs.resize(n);
    stats.nnz_per_col.assign(nnz_per_col.begin(), nnz_per_col.end());
    stats.total_norm_product = total_norm_product;

    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        stats.products[i] = col_norms[i] * row_norms[i];
        sum += stats.products[i];
    }
    if (sum > 0.0) {
        for (Index i = 0; i < n; ++i) stats.probs[i] = stats.products[i] / sum;
    } else if (n > 0) {
        std::fill(stats.probs.begin(), stats.probs.end(), 1.0 / static_cast<double>(n));
    }
    return stats;
}

PairStats pair_stats(const CsrMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("pair_stats: a.cols != b.rows");
    const auto cn = column_norms(a);
    const auto rn = row_norms(b);
    const auto nnz = column_nnz(a);
    return pair_stats_from_norms(cn, rn, nnz, frobenius_norm(a) * frobenius_norm(b));
}

std::vector<Index> rank_pairs(std::span<const double> products) {
    std::vector<Index> order(products.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index x, Index y) {
        if (products[x] != products[y]) return products[x] > products[y];
        return x < y;
    });
    return order;
}

TopKSelection topk_indices(std::span<const double> products, Index k, std::int64_t source_step) {
    const Index n = products.size();
    if (k < 1 || k > n)
        throw ShapeError("topk_indices: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    auto before = [&](Index x, Index y) {
        if (products[x] != products[y]) return products[x] > products[y];
        return x < y;
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), before);
    order.resize(k);
    std::sort(order.begin(), order.end());
    return {std::move(order), k, source_step};
}

TopKSelection topk_indices(const PairStats& stats, Index k, std::int64_t source_step) {
    return topk_indices(stats.products, k, source_step);
}

DenseMatrix approx_spmm_sliced(const ColumnSlice& slice, const DenseMatrix& b, FlopCounter* flops) {
    return spmm(slice.matrix, select_rows(b, slice.column_map), flops);
}

DenseMatrix approx_spmm_topk(const CsrMatrix& a, const DenseMatrix& b, const TopKSelection& sel,
                             FlopCounter* flops) {
    if (a.cols() != b.rows()) throw ShapeError("approx_spmm_topk: a.cols != b.rows");
    if (sel.indices.empty()) return DenseMatrix(a.rows(), b.cols());
    return approx_spmm_sliced(select_columns(a, sel.indices), b, flops);
}

DenseMatrix approx_spmm_sampled(const CsrMatrix& a, const DenseMatrix& b, const PairStats& stats, Index k,
                                Rng& rng, FlopCounter* flops) {
    if (a.cols() != b.rows() || stats.size() != a.cols()) throw ShapeError("approx_spmm_sampled: shape mismatch");
    if (k < 1) throw ShapeError("approx_spmm_sampled: k must be positive");
    if (stats.degenerate()) throw NumericError("approx_spmm_sampled: all pair products are zero");

    const Index n = stats.size();
    std::vector<double> cdf(n);
    std::partial_sum(stats.probs.begin(), stats.probs.end(), cdf.begin());

    std::vector<Index> draws(n, 0);
    for (Index t = 0; t < k; ++t) {
        const double u = rng.uniform() * cdf.back();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        Index i = static_cast<Index>(it - cdf.begin());
        if (i >= n) i = n - 1;
        // upper_bound never lands on a zero-probability pair unless rounding pushes
        // it past the last positive entry; walk back to the nearest drawable pair.
        while (stats.probs[i] == 0.0 && i > 0) --i;
        ++draws[i];
    }

    std::vector<Index> keep;
    for (Index i = 0; i < n; ++i)
        if (draws[i] > 0) keep.push_back(i);

    // Scale each drawn row of b by (count_i) / (k p_i).
    DenseMatrix b_rows = select_rows(b, keep);
    for (Index r = 0; r < keep.size(); ++r) {
        const Index i = keep[r];
        const double scale =
            static_cast<double>(draws[i]) / (static_cast<double>(k) * stats.probs[i]);
        for (double& x : b_rows.row(r)) x *= scale;
    }
    return spmm(select_columns(a, keep).matrix, b_rows, flops);
}

DenseMatrix approx_spmm_sampled(const CsrMatrix& a, const DenseMatrix& b, Index k, Rng& rng, FlopCounter* flops) {
    return approx_spmm_sampled(a, b, pair_stats(a, b), k, rng, flops);
}

double relative_error(const CsrMatrix& a, const DenseMatrix& b, const DenseMatrix& approx) {
    const DenseMatrix exact = spmm(a, b);
    if (exact.rows() != approx.rows() || exact.cols() != approx.cols())
        throw ShapeError("relative_error: approximation has the wrong shape");
    const double num = frobenius_norm(exact - approx);
    const double den = frobenius_norm(a) * frobenius_norm(b);
    if (den == 0.0) {
        if (num == 0.0) return 0.0;
        throw NumericError("relative_error: zero denominator with nonzero error");
    }
    return num / den;
}

Index error_bound_samples(double stable_rank_a, double stable_rank_b, Index n_rows, Index n_cols,
                          double epsilon) {
    const double k = (stable_rank_a + stable_rank_b) * std::log(static_cast<double>(n_rows + n_cols)) /
                     (epsilon * epsilon);
    return std::max<Index>(1, static_cast<Index>(std::ceil(k)));
}

ErrorBoundReport error_bound_check(const CsrMatrix& a, const DenseMatrix& b, double epsilon, Rng& rng,
                                   int trials) {
    if (!(epsilon > 0.0)) throw ShapeError("error_bound_check: epsilon must be positive");
    ErrorBoundReport report;
    report.epsilon = epsilon;
    report.threshold = 2.0 * epsilon;
    report.trials = trials;

    const double fa = frobenius_norm(a);
    const double fb = frobenius_norm(b);
    if (fa == 0.0 || fb == 0.0) {
        // The product is exactly zero; any estimator is exact.
        report.passed = true;
        report.k = 1;
        return report;
    }

    std::vector<double> scaled(a.val().begin(), a.val().end());
    for (double& v : scaled) v /= fa;
    const CsrMatrix an(a.rows(), a.cols(), {a.rowptr().begin(), a.rowptr().end()},
                       {a.col().begin(), a.col().end()}, std::move(scaled));
    const DenseMatrix bn = (1.0 / fb) * b;

    report.stable_rank_a = stable_rank(an.to_dense());
    report.stable_rank_b = stable_rank(bn);
    report.k = error_bound_samples(report.stable_rank_a, report.stable_rank_b, a.rows(), b.cols(), epsilon);

    const DenseMatrix exact = spmm(an, bn);
    const PairStats stats = pair_stats(an, bn);
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
        const DenseMatrix est = approx_spmm_sampled(an, bn, stats, report.k, rng);
        total += frobenius_norm(exact - est);
    }
    report.mean_error = trials > 0 ? total / trials : 0.0;
    report.passed = report.mean_error <= report.threshold;
    return report;
}

}  // namespace rsc
