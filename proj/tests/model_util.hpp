#pragma once

// Small model fixtures shared by the gradient tests and the acceptance runner.

#include <cmath>
#include <vector>

#include "rsc/approx.hpp"
#include "rsc/gnn.hpp"
#include "test_util.hpp"

namespace rsc::testing {

struct ModelFixture {
    GraphOperators ops;
    DenseMatrix x;
    std::vector<int> labels;
    std::vector<bool> mask;
    GnnModel model;
};

inline ModelFixture make_model_fixture(ModelKind kind, Index nodes, std::vector<Index> dims, double edge_p,
                                       std::uint64_t seed) {
    Rng rng(seed);
    Rng graph_rng = rng.split("graph");
    Rng data_rng = rng.split("data");
    Rng init_rng = rng.split("init");
    const CsrMatrix adj = random_graph(nodes, edge_p, graph_rng);
    const Index classes = dims.back();
    DenseMatrix x = random_dense(nodes, dims.front(), data_rng);
    std::vector<int> labels(nodes);
    for (int& l : labels) l = static_cast<int>(data_rng.below(classes));
    GnnModel model(kind, std::move(dims), init_rng);
    // Xavier weights are small; scale up so hidden units sit away from the ReLU kink.
    for (DenseMatrix* p : model.parameters()) *p *= 2.0;
    return {make_operators(kind, adj), std::move(x), std::move(labels), std::vector<bool>(nodes, true),
            std::move(model)};
}

inline double loss_of(ModelFixture& f) {
    return softmax_cross_entropy(f.model.forward(f.ops, f.x), f.labels, f.mask).loss;
}

inline std::vector<LayerGrads> exact_gradients(ModelFixture& f, const SpmmHook& hook = {}) {
    const DenseMatrix logits = f.model.forward(f.ops, f.x);
    const auto lr = softmax_cross_entropy(logits, f.labels, f.mask);
    return f.model.backward(f.ops, lr.grad, hook);
}

/// Largest relative error (per parameter matrix, Frobenius) between backprop and
/// central differences with step h.
inline double finite_difference_error(ModelFixture& f, double h = 1e-5) {
    const auto grads = exact_gradients(f);
    const auto analytic = GnnModel::gradients(grads, f.model.kind());
    const auto params = f.model.parameters();
    double worst = 0.0;
    for (Index p = 0; p < params.size(); ++p) {
        DenseMatrix& w = *params[p];
        DenseMatrix numeric(w.rows(), w.cols());
        for (Index i = 0; i < w.size(); ++i) {
            const double orig = w.data()[i];
            w.data()[i] = orig + h;
            const double up = loss_of(f);
            w.data()[i] = orig - h;
            const double down = loss_of(f);
            w.data()[i] = orig;
            numeric.data()[i] = (up - down) / (2 * h);
        }
        worst = std::max(worst, rel_frobenius(*analytic[p], numeric));
    }
    return worst;
}

/// Backward/forward hook running the scaled stochastic estimator with k draws.
inline SpmmHook sampled_hook(Rng& rng, Index k) {
    return [&rng, k](int, const CsrMatrix& op, const DenseMatrix& dense) {
        if (frobenius_norm(dense) == 0.0) return DenseMatrix(op.rows(), dense.cols());
        return approx_spmm_sampled(op, dense, std::min(k, op.cols()), rng);
    };
}

/// Concatenation of every parameter gradient, for whole-model comparisons.
inline DenseMatrix flatten(const std::vector<LayerGrads>& grads, ModelKind kind) {
    std::vector<double> out;
    for (const DenseMatrix* g : GnnModel::gradients(grads, kind)) out.insert(out.end(), g->data().begin(), g->data().end());
    const Index n = out.size();
    return DenseMatrix(1, n, std::move(out));
}

struct Prop1Result {
    double backward_deviation[3] = {0, 0, 0};  // at 1e3, 4e3, 1.6e4 trials (or fewer)
    double backward_final = 0.0;
    double forward_deviation = 0.0;
};

/// Monte Carlo of the stochastic estimator substituted in the backward SpMM of a
/// 2-layer ReLU GCN (mean ∇Θ vs exact) and, as a diagnostic, in the forward SpMM
/// (mean logits vs exact logits).
inline Prop1Result prop1_experiment(std::uint64_t seed, Index trials, Index k) {
    ModelFixture f = make_model_fixture(ModelKind::gcn, 30, {6, 12, 3}, 0.15, seed);
    const DenseMatrix exact_grad = flatten(exact_gradients(f), ModelKind::gcn);
    const DenseMatrix exact_logits = f.model.forward(f.ops, f.x);
    const auto lr = softmax_cross_entropy(exact_logits, f.labels, f.mask);

    Prop1Result r;
    Rng rng = Rng(seed).split("prop1");
    const SpmmHook hook = sampled_hook(rng, k);
    DenseMatrix sum(exact_grad.rows(), exact_grad.cols());
    const Index checkpoints[3] = {trials / 16, trials / 4, trials};
    int c = 0;
    for (Index t = 1; t <= trials; ++t) {
        sum += flatten(f.model.backward(f.ops, lr.grad, hook), ModelKind::gcn);
        while (c < 3 && t == checkpoints[c])
            r.backward_deviation[c++] = rel_frobenius((1.0 / static_cast<double>(t)) * sum, exact_grad);
    }
    r.backward_final = r.backward_deviation[2];

    DenseMatrix logit_sum(exact_logits.rows(), exact_logits.cols());
    for (Index t = 0; t < trials; ++t) logit_sum += f.model.forward(f.ops, f.x, hook);
    r.forward_deviation = rel_frobenius((1.0 / static_cast<double>(trials)) * logit_sum, exact_logits);
    return r;
}

}  // namespace rsc::testing
