#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rsc/dense.hpp"
#include "rsc/sparse.hpp"

namespace rsc {

enum class ModelKind { gcn, sage };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Ã = D̃^{-1/2} (A + I) D̃^{-1/2} for a square binary adjacency. Existing diagonal
/// entries are replaced by the self-loop.
CsrMatrix normalize_adjacency(const CsrMatrix& adjacency);

/// Sparse operators a model needs, built once per graph.
///
/// GCN aggregates with Ã and back-propagates through Ãᵀ. GraphSAGE aggregates
/// with the mean reducer over the raw adjacency A and back-propagates through
/// (D⁻¹A)ᵀ, whose column j has norm 1/√deg_j for binary A.
struct GraphOperators {
    ModelKind kind = ModelKind::gcn;
    CsrMatrix forward;
    CsrMatrix backward;
    std::vector<double> backward_col_norms;
    std::vector<Index> backward_col_nnz;
    double backward_frobenius = 0.0;

    Index nodes() const noexcept { return forward.rows(); }
};

GraphOperators make_operators(ModelKind kind, const CsrMatrix& adjacency);

/// Computes `op * dense` for the sparse product attached to `layer`. The forward
/// hook sees (Ã, J) or (A, H); the backward hook sees the backward operator and
/// the upstream gradient.
using SpmmHook = std::function<DenseMatrix(int layer, const CsrMatrix& op, const DenseMatrix& dense)>;

struct LayerGrads {
    DenseMatrix self;   // ∇Θ (GCN) or ∇W₁ (SAGE)
    DenseMatrix neigh;  // ∇W₂ (SAGE only)
};

/// Full-graph GCN / GraphSAGE(mean) stack with explicit forward and backward.
///
/// GCN layer:  J = H Θ,  H_pre = Ã J,  H' = ReLU(H_pre)
/// SAGE layer: M = mean(A, H),  H_pre = H W₁ + M W₂,  H' = ReLU(H_pre)
/// The output layer has no activation.
class GnnModel {
public:
    struct Layer {
        DenseMatrix self;
        DenseMatrix neigh;
        // Forward caches.
        DenseMatrix input;
        DenseMatrix mixed;  // J (GCN) or M (SAGE)
        DenseMatrix pre;
    };

    GnnModel(ModelKind kind, std::vector<Index> dims, Rng& rng);

    ModelKind kind() const noexcept { return kind_; }
    Index num_layers() const noexcept { return layers_.size(); }
    std::span<const Index> dims() const noexcept { return dims_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    /// Layers whose backward pass contains a sparse product. Every GCN layer; SAGE
    /// layers from the second on (the first layer's aggregation input is constant).
    std::vector<int> backward_spmm_layers() const;

    /// Runs the forward pass and caches intermediates. `forward_hook` replaces the
    /// aggregation product when set (diagnostics only).
    DenseMatrix forward(const GraphOperators& ops, const DenseMatrix& x, const SpmmHook& forward_hook = {});

    /// Back-propagates d(loss)/d(logits) through the cached forward pass. The ReLU
    /// mask comes from the cached exact pre-activations. `backward_hook` computes
    /// each backward sparse product; exact spmm when empty.
    std::vector<LayerGrads> backward(const GraphOperators& ops, const DenseMatrix& grad_logits,
                                     const SpmmHook& backward_hook = {}) const;

    /// Parameters in a fixed order (layer-major, self before neigh).
    std::vector<DenseMatrix*> parameters();
    static std::vector<const DenseMatrix*> gradients(const std::vector<LayerGrads>& grads, ModelKind kind);

private:
    ModelKind kind_;
    std::vector<Index> dims_;
    std::vector<Layer> layers_;
};

/// Fraction of rows with mask set where argmax(logits) equals the label.
double masked_accuracy(const DenseMatrix& logits, std::span<const int> labels, const std::vector<bool>& mask);

}  // namespace rsc
