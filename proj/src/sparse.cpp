#include "rsc/sparse.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "rsc/errors.hpp"

namespace rsc {

CsrMatrix::CsrMatrix(Index n_rows, Index n_cols, std::vector<Index> rowptr, std::vector<Index> col,
                     std::vector<double> val)
    : n_rows_(n_rows), n_cols_(n_cols), rowptr_(std::move(rowptr)), col_(std::move(col)), val_(std::move(val)) {
    if (rowptr_.size() != n_rows_ + 1 || rowptr_.front() != 0)
        throw ShapeError("CsrMatrix: rowptr must have n_rows+1 entries starting at 0");
    if (rowptr_.back() != col_.size() || col_.size() != val_.size())
        throw ShapeError("CsrMatrix: rowptr.back(), col and val lengths disagree");
    for (Index r = 0; r < n_rows_; ++r) {
        if (rowptr_[r] > rowptr_[r + 1]) throw ShapeError("CsrMatrix: rowptr decreases");
        for (Index t = rowptr_[r]; t < rowptr_[r + 1]; ++t) {
            if (col_[t] >= n_cols_) throw ShapeError("CsrMatrix: column index out of range");
            if (t > rowptr_[r] && col_[t] <= col_[t - 1])
                throw ShapeError("CsrMatrix: column indices not strictly increasing in row " + std::to_string(r));
        }
    }
}

CsrMatrix CsrMatrix::from_coo(Index n_rows, Index n_cols, std::span<const CooEntry> entries) {
    std::vector<Index> counts(n_rows + 1, 0);
    for (const auto& e : entries) {
        if (e.row >= n_rows || e.col >= n_cols)
            throw ShapeError("from_coo: entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                             ") outside " + std::to_string(n_rows) + "x" + std::to_string(n_cols));
        ++counts[e.row + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());

    // Bucket by row, then sort each row by column and fold duplicates.
    std::vector<std::pair<Index, double>> buckets(entries.size());
    std::vector<Index> fill(counts.begin(), counts.end() - 1);
    for (const auto& e : entries) buckets[fill[e.row]++] = {e.col, e.value};

    std::vector<Index> rowptr(n_rows + 1, 0);
    std::vector<Index> col;
    std::vector<double> val;
    col.reserve(entries.size());
    val.reserve(entries.size());
    for (Index r = 0; r < n_rows; ++r) {
        auto first = buckets.begin() + static_cast<std::ptrdiff_t>(counts[r]);
        auto last = buckets.begin() + static_cast<std::ptrdiff_t>(counts[r + 1]);
        std::stable_sort(first, last, [](const auto& x, const auto& y) { return x.first < y.first; });
        for (auto it = first; it != last; ++it) {
            if (!col.empty() && col.size() > rowptr[r] && col.back() == it->first) {
                val.back() += it->second;
            } else {
                col.push_back(it->first);
                val.push_back(it->second);
            }
        }
        rowptr[r + 1] = col.size();
    }
    return CsrMatrix(n_rows, n_cols, std::move(rowptr), std::move(col), std::move(val));
}

CsrMatrix CsrMatrix::identity(Index n) {
    std::vector<Index> rowptr(n + 1);
    std::vector<Index> col(n);
    std::iota(rowptr.begin(), rowptr.end(), Index{0});
    std::iota(col.begin(), col.end(), Index{0});
    return CsrMatrix(n, n, std::move(rowptr), std::move(col), std::vector<double>(n, 1.0));
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& dense) {
    std::vector<Index> rowptr(dense.rows() + 1, 0);
    std::vector<Index> col;
    std::vector<double> val;
    for (Index i = 0; i < dense.rows(); ++i) {
        for (Index j = 0; j < dense.cols(); ++j) {
            if (dense(i, j) != 0.0) {
                col.push_back(j);
                val.push_back(dense(i, j));
            }
        }
        rowptr[i + 1] = col.size();
    }
    return CsrMatrix(dense.rows(), dense.cols(), std::move(rowptr), std::move(col), std::move(val));
}

std::vector<CooEntry> CsrMatrix::entries() const {
    std::vector<CooEntry> out;
    out.reserve(nnz());
    for (Index r = 0; r < n_rows_; ++r)
        for (Index t = rowptr_[r]; t < rowptr_[r + 1]; ++t) out.push_back({r, col_[t], val_[t]});
    return out;
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix out(n_rows_, n_cols_);
    for (Index r = 0; r < n_rows_; ++r)
        for (Index t = rowptr_[r]; t < rowptr_[r + 1]; ++t) out(r, col_[t]) = val_[t];
    return out;
}

std::uint64_t CsrMatrix::checksum() const noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto feed = [&h](std::uint64_t word) {
        for (int i = 0; i < 8; ++i) {
            h ^= (word >> (8 * i)) & 0xFFu;
            h *= 0x100000001B3ULL;
        }
    };
    feed(n_rows_);
    feed(n_cols_);
    for (Index p : rowptr_) feed(p);
    for (Index c : col_) feed(c);
    for (double v : val_) feed(std::bit_cast<std::uint64_t>(v));
    return h;
}

CsrMatrix transpose(const CsrMatrix& a) {
    std::vector<Index> rowptr(a.cols() + 1, 0);
    for (Index c : a.col()) ++rowptr[c + 1];
    std::partial_sum(rowptr.begin(), rowptr.end(), rowptr.begin());

    std::vector<Index> col(a.nnz());
    std::vector<double> val(a.nnz());
    std::vector<Index> fill(rowptr.begin(), rowptr.end() - 1);
    // Visiting source rows in order keeps each output row's columns ascending.
    for (Index r = 0; r < a.rows(); ++r) {
        for (Index t = a.row_begin(r); t < a.row_end(r); ++t) {
            const Index dst = fill[a.col()[t]]++;
            col[dst] = r;
            val[dst] = a.val()[t];
        }
    }
    return CsrMatrix(a.cols(), a.rows(), std::move(rowptr), std::move(col), std::move(val));
}

DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& b, FlopCounter* flops) {
    if (a.cols() != b.rows())
        throw ShapeError("spmm: a is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         ", b has " + std::to_string(b.rows()) + " rows");
    DenseMatrix out(a.rows(), b.cols());
    const auto col = a.col();
    const auto val = a.val();
    for (Index i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (Index t = a.row_begin(i); t < a.row_end(i); ++t) {
            const double w = val[t];
            auto b_row = b.row(col[t]);
            for (Index j = 0; j < b.cols(); ++j) out_row[j] += w * b_row[j];
        }
    }
    count_flops(flops, static_cast<std::uint64_t>(a.nnz()) * b.cols());
    return out;
}

DenseMatrix spmm_mean(const CsrMatrix& a, const DenseMatrix& b, FlopCounter* flops) {
    DenseMatrix out = spmm(a, b, flops);
    for (Index i = 0; i < a.rows(); ++i) {
        const Index r = a.row_nnz(i);
        if (r == 0) continue;
        const double inv = 1.0 / static_cast<double>(r);
        for (double& x : out.row(i)) x *= inv;
    }
    return out;
}

CsrMatrix row_mean_operator(const CsrMatrix& a) {
    std::vector<double> val(a.val().begin(), a.val().end());
    for (Index i = 0; i < a.rows(); ++i) {
        const Index r = a.row_nnz(i);
        if (r == 0) continue;
        const double inv = 1.0 / static_cast<double>(r);
        for (Index t = a.row_begin(i); t < a.row_end(i); ++t) val[t] *= inv;
    }
    return CsrMatrix(a.rows(), a.cols(), {a.rowptr().begin(), a.rowptr().end()}, {a.col().begin(), a.col().end()},
                     std::move(val));
}

std::vector<double> column_norms(const CsrMatrix& a) {
    std::vector<double> sq(a.cols(), 0.0);
    const auto col = a.col();
    const auto val = a.val();
    for (Index t = 0; t < a.nnz(); ++t) sq[col[t]] += val[t] * val[t];
    for (double& s : sq) s = std::sqrt(s);
    return sq;
}

std::vector<Index> column_nnz(const CsrMatrix& a) {
    std::vector<Index> counts(a.cols(), 0);
    for (Index c : a.col()) ++counts[c];
    return counts;
}

double frobenius_norm(const CsrMatrix& a) {
    double acc = 0.0;
    for (double v : a.val()) acc += v * v;
    return std::sqrt(acc);
}

ColumnSlice select_columns(const CsrMatrix& a, std::span<const Index> keep) {
    constexpr Index kDropped = static_cast<Index>(-1);
    std::vector<Index> remap(a.cols(), kDropped);
    for (Index j = 0; j < keep.size(); ++j) {
        if (keep[j] >= a.cols()) throw ShapeError("select_columns: index out of range");
        if (j > 0 && keep[j] <= keep[j - 1])
            throw ShapeError("select_columns: indices must be unique and ascending");
        remap[keep[j]] = j;
    }

    std::vector<Index> rowptr(a.rows() + 1, 0);
    std::vector<Index> col;
    std::vector<double> val;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index t = a.row_begin(i); t < a.row_end(i); ++t) {
            const Index mapped = remap[a.col()[t]];
            if (mapped == kDropped) continue;
            col.push_back(mapped);
            val.push_back(a.val()[t]);
        }
        rowptr[i + 1] = col.size();
    }
    return {CsrMatrix(a.rows(), keep.size(), std::move(rowptr), std::move(col), std::move(val)),
            std::vector<Index>(keep.begin(), keep.end())};
}

}  // namespace rsc
