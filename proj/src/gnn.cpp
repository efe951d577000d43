#include "rsc/gnn.hpp"

#include <algorithm>
#include <cmath>

#include "rsc/errors.hpp"

namespace rsc {

std::string to_string(ModelKind kind) { return kind == ModelKind::gcn ? "gcn" : "sage"; }

ModelKind parse_model_kind(const std::string& name) {
    if (name == "gcn") return ModelKind::gcn;
    if (name == "sage") return ModelKind::sage;
    throw ConfigError("unknown model '" + name + "' (expected gcn or sage)");
}

CsrMatrix normalize_adjacency(const CsrMatrix& adjacency) {
    if (adjacency.rows() != adjacency.cols()) throw ShapeError("normalize_adjacency: matrix must be square");
    const Index n = adjacency.rows();
    std::vector<double> degree(n, 1.0);  // self-loop
    for (Index i = 0; i < n; ++i)
        for (Index t = adjacency.row_begin(i); t < adjacency.row_end(i); ++t)
            if (adjacency.col()[t] != i) degree[i] += adjacency.val()[t];

    std::vector<CooEntry> entries;
    entries.reserve(adjacency.nnz() + n);
    for (Index i = 0; i < n; ++i) {
        entries.push_back({i, i, 1.0 / degree[i]});
        for (Index t = adjacency.row_begin(i); t < adjacency.row_end(i); ++t) {
            const Index j = adjacency.col()[t];
            if (j == i) continue;
            entries.push_back({i, j, adjacency.val()[t] / std::sqrt(degree[i] * degree[j])});
        }
    }
    return CsrMatrix::from_coo(n, n, entries);
}

GraphOperators make_operators(ModelKind kind, const CsrMatrix& adjacency) {
    GraphOperators ops;
    ops.kind = kind;
    if (kind == ModelKind::gcn) {
        ops.forward = normalize_adjacency(adjacency);
        ops.backward = transpose(ops.forward);
    } else {
        ops.forward = adjacency;
        ops.backward = transpose(row_mean_operator(adjacency));
    }
    ops.backward_col_norms = column_norms(ops.backward);
    ops.backward_col_nnz = column_nnz(ops.backward);
    ops.backward_frobenius = frobenius_norm(ops.backward);
    return ops;
}

GnnModel::GnnModel(ModelKind kind, std::vector<Index> dims, Rng& rng) : kind_(kind), dims_(std::move(dims)) {
    if (dims_.size() < 2) throw ConfigError("GnnModel: need at least one layer");
    for (Index l = 0; l + 1 < dims_.size(); ++l) {
        Layer layer;
        layer.self = xavier_init(dims_[l], dims_[l + 1], rng);
        if (kind_ == ModelKind::sage) layer.neigh = xavier_init(dims_[l], dims_[l + 1], rng);
        layers_.push_back(std::move(layer));
    }
}

std::vector<int> GnnModel::backward_spmm_layers() const {
    std::vector<int> out;
    for (int l = kind_ == ModelKind::gcn ? 0 : 1; l < static_cast<int>(layers_.size()); ++l) out.push_back(l);
    return out;
}

DenseMatrix GnnModel::forward(const GraphOperators& ops, const DenseMatrix& x, const SpmmHook& forward_hook) {
    if (x.cols() != dims_.front()) throw ShapeError("GnnModel::forward: feature width does not match model");
    if (x.rows() != ops.nodes()) throw ShapeError("GnnModel::forward: feature rows do not match graph");
    DenseMatrix h = x;
    for (Index l = 0; l < layers_.size(); ++l) {
        Layer& layer = layers_[l];
        const int id = static_cast<int>(l);
        layer.input = h;
        if (kind_ == ModelKind::gcn) {
            layer.mixed = matmul(h, layer.self);
            layer.pre = forward_hook ? forward_hook(id, ops.forward, layer.mixed) : spmm(ops.forward, layer.mixed);
        } else {
            if (forward_hook) {
                // The hook approximates the mean product through the D⁻¹A operator.
                layer.mixed = forward_hook(id, row_mean_operator(ops.forward), h);
            } else {
                layer.mixed = spmm_mean(ops.forward, h);
            }
            layer.pre = matmul(h, layer.self) + matmul(layer.mixed, layer.neigh);
        }
        h = l + 1 == layers_.size() ? layer.pre : relu(layer.pre);
    }
    return h;
}

std::vector<LayerGrads> GnnModel::backward(const GraphOperators& ops, const DenseMatrix& grad_logits,
                                           const SpmmHook& backward_hook) const {
    if (layers_.front().pre.empty()) throw ShapeError("GnnModel::backward: forward caches are empty");
    auto product = [&](int layer, const DenseMatrix& upstream) {
        return backward_hook ? backward_hook(layer, ops.backward, upstream) : spmm(ops.backward, upstream);
    };

    std::vector<LayerGrads> grads(layers_.size());
    DenseMatrix grad_h = grad_logits;
    for (Index idx = layers_.size(); idx-- > 0;) {
        const Layer& layer = layers_[idx];
        const int id = static_cast<int>(idx);
        const bool output = idx + 1 == layers_.size();
        const DenseMatrix grad_pre = output ? grad_h : relu_backward(layer.pre, grad_h);

        if (kind_ == ModelKind::gcn) {
            const DenseMatrix grad_j = product(id, grad_pre);
            grads[idx].self = matmul_tn(layer.input, grad_j);
            if (idx > 0) grad_h = matmul_nt(grad_j, layer.self);
        } else {
            grads[idx].self = matmul_tn(layer.input, grad_pre);
            grads[idx].neigh = matmul_tn(layer.mixed, grad_pre);
            if (idx > 0) {
                const DenseMatrix grad_mixed = matmul_nt(grad_pre, layer.neigh);
                grad_h = matmul_nt(grad_pre, layer.self) + product(id, grad_mixed);
            }
        }
    }
    return grads;
}

std::vector<DenseMatrix*> GnnModel::parameters() {
    std::vector<DenseMatrix*> out;
    for (auto& layer : layers_) {
        out.push_back(&layer.self);
        if (kind_ == ModelKind::sage) out.push_back(&layer.neigh);
    }
    return out;
}

std::vector<const DenseMatrix*> GnnModel::gradients(const std::vector<LayerGrads>& grads, ModelKind kind) {
    std::vector<const DenseMatrix*> out;
    for (const auto& g : grads) {
        out.push_back(&g.self);
        if (kind == ModelKind::sage) out.push_back(&g.neigh);
    }
    return out;
}

double masked_accuracy(const DenseMatrix& logits, std::span<const int> labels, const std::vector<bool>& mask) {
    Index total = 0;
    Index correct = 0;
    for (Index i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        auto row = logits.row(i);
        const auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        ++total;
        if (pred == labels[i]) ++correct;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace rsc
