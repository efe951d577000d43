#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "rsc/flops.hpp"
#include "rsc/rng.hpp"

namespace rsc {

using Index = std::size_t;

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols, double fill = 0.0);
    DenseMatrix(Index rows, Index cols, std::vector<double> data);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(Index n);

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(Index r, Index c) noexcept { return data_[r * cols_ + c]; }
    double operator()(Index r, Index c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(Index r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(Index r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const DenseMatrix&) const = default;

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double s) noexcept;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

DenseMatrix transpose(const DenseMatrix& a);

/// a * b. Counts a.rows * a.cols * b.cols multiply-adds.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* flops = nullptr);
/// aᵀ * b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* flops = nullptr);
/// a * bᵀ without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* flops = nullptr);

DenseMatrix relu(const DenseMatrix& x);
/// 1[pre_activation > 0] ⊙ upstream. The derivative at exactly 0 is 0.
DenseMatrix relu_backward(const DenseMatrix& pre_activation, const DenseMatrix& upstream);

std::vector<double> row_norms(const DenseMatrix& x);
double frobenius_norm(const DenseMatrix& x);

/// Rows `indices` of x, in the order given.
DenseMatrix select_rows(const DenseMatrix& x, std::span<const Index> indices);

struct LossResult {
    double loss = 0.0;
    DenseMatrix grad;
};

/// Mean cross-entropy over rows with mask[i] set. Softmax is stabilized by
/// subtracting the row max. Unmasked rows get a zero gradient.
LossResult softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                                 const std::vector<bool>& mask);

/// Glorot uniform initialization on ±sqrt(6 / (rows + cols)).
DenseMatrix xavier_init(Index rows, Index cols, Rng& rng);

struct AdamOptions {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    DenseMatrix m;
    DenseMatrix v;
    std::int64_t t = 0;
};

/// One Adam update with bias correction; increments state.t before use.
void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, const AdamOptions& opts);

/// Largest singular value by power iteration on xᵀx (fixed start vector).
double spectral_norm(const DenseMatrix& x, double rel_tol = 1e-6, int max_iter = 1000);

/// ‖x‖_F² / σ_max(x)². Throws NumericError for a zero matrix.
double stable_rank(const DenseMatrix& x);

bool all_finite(const DenseMatrix& x) noexcept;

}  // namespace rsc
