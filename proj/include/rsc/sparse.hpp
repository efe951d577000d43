#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsc/dense.hpp"
#include "rsc/flops.hpp"

namespace rsc {

struct CooEntry {
    Index row = 0;
    Index col = 0;
    double value = 0.0;

    bool operator==(const CooEntry&) const = default;
};

/// Compressed sparse row matrix.
///
/// Invariants (checked on construction): rowptr has n_rows+1 entries starting at 0
/// and non-decreasing, rowptr.back() == nnz, and column indices inside each row are
/// strictly increasing and below n_cols. Explicit zeros may be stored. Immutable
/// once built.
class CsrMatrix {
public:
    CsrMatrix() : rowptr_(1, 0) {}
    CsrMatrix(Index n_rows, Index n_cols, std::vector<Index> rowptr, std::vector<Index> col,
              std::vector<double> val);

    /// Canonical CSR from triples. Duplicate (row, col) pairs are summed.
    static CsrMatrix from_coo(Index n_rows, Index n_cols, std::span<const CooEntry> entries);
    static CsrMatrix identity(Index n);
    /// Stores every entry of `dense` whose value is non-zero.
    static CsrMatrix from_dense(const DenseMatrix& dense);

    Index rows() const noexcept { return n_rows_; }
    Index cols() const noexcept { return n_cols_; }
    Index nnz() const noexcept { return col_.size(); }

    std::span<const Index> rowptr() const noexcept { return rowptr_; }
    std::span<const Index> col() const noexcept { return col_; }
    std::span<const double> val() const noexcept { return val_; }

    Index row_begin(Index r) const noexcept { return rowptr_[r]; }
    Index row_end(Index r) const noexcept { return rowptr_[r + 1]; }
    Index row_nnz(Index r) const noexcept { return rowptr_[r + 1] - rowptr_[r]; }

    std::vector<CooEntry> entries() const;
    DenseMatrix to_dense() const;

    /// Order-sensitive FNV-1a digest over shape, structure and value bits.
    std::uint64_t checksum() const noexcept;

    bool operator==(const CsrMatrix&) const = default;

private:
    Index n_rows_ = 0;
    Index n_cols_ = 0;
    std::vector<Index> rowptr_;
    std::vector<Index> col_;
    std::vector<double> val_;
};

CsrMatrix transpose(const CsrMatrix& a);

/// out[i,:] = Σ_t val[t] * b[col[t], :], summed in ascending column order.
/// Counts nnz(a) * b.cols multiply-adds.
DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& b, FlopCounter* flops = nullptr);

/// spmm with a mean reducer: row i is divided by its stored-entry count r_i
/// (explicit zeros included); empty rows produce zeros.
DenseMatrix spmm_mean(const CsrMatrix& a, const DenseMatrix& b, FlopCounter* flops = nullptr);

/// D⁻¹A as a CSR, with D the per-row stored-entry count. spmm(row_mean_operator(a), b)
/// equals spmm_mean(a, b).
CsrMatrix row_mean_operator(const CsrMatrix& a);

std::vector<double> column_norms(const CsrMatrix& a);
std::vector<Index> column_nnz(const CsrMatrix& a);
double frobenius_norm(const CsrMatrix& a);

struct ColumnSlice {
    CsrMatrix matrix;                 // n_rows x keep.size()
    std::vector<Index> column_map;    // new column j <- original column column_map[j]
};

/// Keeps only the columns listed in `keep` (unique, ascending, in range); original
/// column keep[j] becomes column j. Pair with select_rows(b, slice.column_map).
ColumnSlice select_columns(const CsrMatrix& a, std::span<const Index> keep);

}  // namespace rsc
