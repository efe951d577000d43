#include "rsc/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsc/errors.hpp"

namespace rsc {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
    }
}

}  // namespace

DenseMatrix::DenseMatrix(Index rows, Index cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(Index rows, Index cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw ShapeError("DenseMatrix: data length does not match shape");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("DenseMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::identity(Index n) {
    DenseMatrix out(n, n);
    for (Index i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (Index i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (Index i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* flops) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (Index p = 0; p < a.cols(); ++p) {
            const double s = a(i, p);
            auto b_row = b.row(p);
            for (Index j = 0; j < b.cols(); ++j) out_row[j] += s * b_row[j];
        }
    }
    count_flops(flops, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
    return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* flops) {
    if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
    DenseMatrix out(a.cols(), b.cols());
    for (Index p = 0; p < a.rows(); ++p) {
        auto a_row = a.row(p);
        auto b_row = b.row(p);
        for (Index i = 0; i < a.cols(); ++i) {
            const double s = a_row[i];
            auto out_row = out.row(i);
            for (Index j = 0; j < b.cols(); ++j) out_row[j] += s * b_row[j];
        }
    }
    count_flops(flops, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
    return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* flops) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
    DenseMatrix out(a.rows(), b.rows());
    for (Index i = 0; i < a.rows(); ++i) {
        auto a_row = a.row(i);
        for (Index j = 0; j < b.rows(); ++j) {
            auto b_row = b.row(j);
            double acc = 0.0;
            for (Index p = 0; p < a.cols(); ++p) acc += a_row[p] * b_row[p];
            out(i, j) = acc;
        }
    }
    count_flops(flops, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.rows());
    return out;
}

DenseMatrix relu(const DenseMatrix& x) {
    DenseMatrix out = x;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

DenseMatrix relu_backward(const DenseMatrix& pre_activation, const DenseMatrix& upstream) {
    require_same_shape(pre_activation, upstream, "relu_backward");
    DenseMatrix out(upstream.rows(), upstream.cols());
    auto pre = pre_activation.data();
    auto up = upstream.data();
    auto dst = out.data();
    for (Index i = 0; i < dst.size(); ++i) dst[i] = pre[i] > 0.0 ? up[i] : 0.0;
    return out;
}

std::vector<double> row_norms(const DenseMatrix& x) {
    std::vector<double> out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        double acc = 0.0;
        for (double v : x.row(i)) acc += v * v;
        out[i] = std::sqrt(acc);
    }
    return out;
}

double frobenius_norm(const DenseMatrix& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v * v;
    return std::sqrt(acc);
}

DenseMatrix select_rows(const DenseMatrix& x, std::span<const Index> indices) {
    DenseMatrix out(indices.size(), x.cols());
    for (Index r = 0; r < indices.size(); ++r) {
        if (indices[r] >= x.rows()) throw ShapeError("select_rows: index out of range");
        std::copy_n(x.row(indices[r]).begin(), x.cols(), out.row(r).begin());
    }
    return out;
}

LossResult softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                                 const std::vector<bool>& mask) {
    if (labels.size() != logits.rows() || mask.size() != logits.rows())
        throw ShapeError("softmax_cross_entropy: labels/mask length must equal row count");
    const auto count = static_cast<Index>(std::count(mask.begin(), mask.end(), true));
    if (count == 0) throw ConfigError("softmax_cross_entropy: empty mask");

    LossResult result{0.0, DenseMatrix(logits.rows(), logits.cols())};
    const double inv_count = 1.0 / static_cast<double>(count);
    std::vector<double> probs(logits.cols());
    for (Index i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        const int label = labels[i];
        if (label < 0 || static_cast<Index>(label) >= logits.cols())
            throw ShapeError("softmax_cross_entropy: label out of class range");
        auto row = logits.row(i);
        const double row_max = *std::max_element(row.begin(), row.end());
        double denom = 0.0;
        for (Index c = 0; c < row.size(); ++c) {
            probs[c] = std::exp(row[c] - row_max);
            denom += probs[c];
        }
        result.loss += (std::log(denom) - (row[label] - row_max)) * inv_count;
        auto grad_row = result.grad.row(i);
        for (Index c = 0; c < row.size(); ++c) {
            const double p = probs[c] / denom;
            grad_row[c] = (p - (static_cast<Index>(label) == c ? 1.0 : 0.0)) * inv_count;
        }
    }
    return result;
}

DenseMatrix xavier_init(Index rows, Index cols, Rng& rng) {
    if (rows == 0 || cols == 0) throw ShapeError("xavier_init: dimensions must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    DenseMatrix out(rows, cols);
    for (double& v : out.data()) v = rng.uniform(-bound, bound);
    return out;
}

void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, const AdamOptions& opts) {
    require_same_shape(param, grad, "adam_step");
    if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
        state.m = DenseMatrix(param.rows(), param.cols());
        state.v = DenseMatrix(param.rows(), param.cols());
        state.t = 0;
    }
    ++state.t;
    const double correction1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.t));
    const double correction2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.t));
    auto p = param.data();
    auto g = grad.data();
    auto m = state.m.data();
    auto v = state.v.data();
    for (Index i = 0; i < p.size(); ++i) {
        m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
        v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        p[i] -= opts.lr * m_hat / (std::sqrt(v_hat) + opts.epsilon);
    }
}

double spectral_norm(const DenseMatrix& x, double rel_tol, int max_iter) {
    const Index n = x.cols();
    if (n == 0 || x.rows() == 0) return 0.0;
    Rng rng(0x5EED5EEDULL);
    std::vector<double> v(n);
    for (double& e : v) e = 0.5 + rng.uniform();

    auto normalize = [](std::vector<double>& u) {
        double s = 0.0;
        for (double e : u) s += e * e;
        s = std::sqrt(s);
        if (s > 0.0)
            for (double& e : u) e /= s;
        return s;
    };
    normalize(v);

    std::vector<double> xv(x.rows());
    std::vector<double> w(n);
    double lambda = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        for (Index i = 0; i < x.rows(); ++i) {
            double acc = 0.0;
            auto r = x.row(i);
            for (Index j = 0; j < n; ++j) acc += r[j] * v[j];
            xv[i] = acc;
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (Index i = 0; i < x.rows(); ++i) {
            auto r = x.row(i);
            for (Index j = 0; j < n; ++j) w[j] += r[j] * xv[i];
        }
        // ‖xᵀx v‖ with ‖v‖ = 1 estimates σ_max².
        const double next = normalize(w);
        if (next == 0.0) return 0.0;
        v.swap(w);
        const bool converged = std::abs(next - lambda) <= rel_tol * next;
        lambda = next;
        if (converged) break;
    }
    return std::sqrt(lambda);
}

double stable_rank(const DenseMatrix& x) {
    const double fro = frobenius_norm(x);
    if (fro == 0.0) throw NumericError("stable_rank: zero matrix");
    const double sigma = spectral_norm(x);
    return (fro * fro) / (sigma * sigma);
}

bool all_finite(const DenseMatrix& x) noexcept {
    return std::all_of(x.data().begin(), x.data().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace rsc
