#include <gtest/gtest.h>

#include <cmath>

#include "rsc/errors.hpp"
#include "rsc/gnn.hpp"
#include "model_util.hpp"
#include "test_util.hpp"

namespace rsc {
namespace {

using testing::make_model_fixture;

TEST(NormalizeAdjacency, Examples) {
    EXPECT_EQ(normalize_adjacency(CsrMatrix::from_coo(1, 1, {})).to_dense(), (DenseMatrix{{1}}));

    const std::vector<CooEntry> pair{{0, 1, 1}, {1, 0, 1}};
    EXPECT_EQ(normalize_adjacency(CsrMatrix::from_coo(2, 2, pair)).to_dense(), (DenseMatrix{{0.5, 0.5}, {0.5, 0.5}}));

    std::vector<CooEntry> star;
    for (Index leaf = 1; leaf <= 3; ++leaf) {
        star.push_back({0, leaf, 1});
        star.push_back({leaf, 0, 1});
    }
    const DenseMatrix s = normalize_adjacency(CsrMatrix::from_coo(4, 4, star)).to_dense();
    EXPECT_DOUBLE_EQ(s(0, 0), 0.25);
    for (Index leaf = 1; leaf <= 3; ++leaf) {
        EXPECT_DOUBLE_EQ(s(0, leaf), 1.0 / std::sqrt(8.0));
        EXPECT_DOUBLE_EQ(s(leaf, 0), 1.0 / std::sqrt(8.0));
        EXPECT_DOUBLE_EQ(s(leaf, leaf), 0.5);
    }
    EXPECT_THROW(normalize_adjacency(CsrMatrix::from_coo(2, 3, {})), ShapeError);
}

TEST(NormalizeAdjacency, SymmetricOnRandomGraphs) {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const CsrMatrix a = normalize_adjacency(testing::random_graph(25, 0.2, rng));
        EXPECT_LE(testing::rel_frobenius(transpose(a).to_dense(), a.to_dense()), 1e-15);
    }
}

TEST(GcnForward, IdentityGraphAndWeightsPassFeaturesThrough) {
    Rng rng(2);
    GnnModel model(ModelKind::gcn, {3, 3, 3}, rng);
    for (DenseMatrix* p : model.parameters()) *p = DenseMatrix::identity(3);
    // No edges: Ã = I. Non-negative features survive the hidden ReLU.
    const GraphOperators ops = make_operators(ModelKind::gcn, CsrMatrix::from_coo(4, 4, {}));
    const DenseMatrix x{{1, 0, 2}, {0, 3, 1}, {4, 4, 0}, {0.5, 0, 0}};
    EXPECT_EQ(model.forward(ops, x), x);

    for (DenseMatrix* p : model.parameters()) *p = DenseMatrix(3, 3);
    EXPECT_EQ(model.forward(ops, x), DenseMatrix(4, 3));
}

TEST(GcnForward, ThreeNodePathOneLayer) {
    Rng rng(3);
    GnnModel model(ModelKind::gcn, {2, 1}, rng);
    model.layers()[0].self = DenseMatrix{{1}, {-1}};
    // Path 0-1-2: degrees+1 = 2, 3, 2.
    const std::vector<CooEntry> path{{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}};
    const GraphOperators ops = make_operators(ModelKind::gcn, CsrMatrix::from_coo(3, 3, path));
    const DenseMatrix x{{1, 0}, {0, 1}, {2, 1}};  // J = [1, -1, 1]
    const double r6 = 1.0 / std::sqrt(6.0);
    const DenseMatrix expected{{0.5 * 1 + r6 * -1}, {r6 * 1 + (1.0 / 3) * -1 + r6 * 1}, {r6 * -1 + 0.5 * 1}};
    EXPECT_LE(testing::rel_frobenius(model.forward(ops, x), expected), 1e-15);
}

TEST(SageForward, MatchesHandComputation) {
    Rng rng(4);
    GnnModel model(ModelKind::sage, {1, 1}, rng);
    model.layers()[0].self = DenseMatrix{{2}};
    model.layers()[0].neigh = DenseMatrix{{10}};
    const std::vector<CooEntry> path{{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}};
    const GraphOperators ops = make_operators(ModelKind::sage, CsrMatrix::from_coo(3, 3, path));
    const DenseMatrix x{{1}, {2}, {4}};
    // mean neighbours: [2, 2.5, 2].
    EXPECT_EQ(model.forward(ops, x), (DenseMatrix{{22}, {29}, {28}}));
}

TEST(Gradients, GcnMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto f = make_model_fixture(ModelKind::gcn, 20, {5, 8, 3}, 0.2, seed);
        EXPECT_LE(testing::finite_difference_error(f), 1e-4) << "seed " << seed;
    }
}

TEST(Gradients, SageMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto f = make_model_fixture(ModelKind::sage, 20, {5, 8, 3}, 0.2, seed);
        EXPECT_LE(testing::finite_difference_error(f), 1e-4) << "seed " << seed;
    }
}

TEST(Gradients, ThreeLayerModelsMatchFiniteDifferences) {
    auto g = make_model_fixture(ModelKind::gcn, 15, {4, 6, 5, 3}, 0.25, 42);
    EXPECT_LE(testing::finite_difference_error(g), 1e-4);
    auto s = make_model_fixture(ModelKind::sage, 15, {4, 6, 5, 3}, 0.25, 43);
    EXPECT_LE(testing::finite_difference_error(s), 1e-4);
}

TEST(Gradients, SageWithoutNeighbourWeightsIsAnMlp) {
    auto f = make_model_fixture(ModelKind::sage, 12, {4, 5, 2}, 0.3, 7);
    for (auto& layer : f.model.layers()) layer.neigh = DenseMatrix(layer.neigh.rows(), layer.neigh.cols());
    const auto grads = testing::exact_gradients(f);
    // Plain MLP oracle: H1 = relu(X W1), logits = H1 W2.
    const auto& l0 = f.model.layers()[0];
    const auto& l1 = f.model.layers()[1];
    const DenseMatrix pre0 = matmul(f.x, l0.self);
    const DenseMatrix h1 = relu(pre0);
    const auto lr = softmax_cross_entropy(matmul(h1, l1.self), f.labels, f.mask);
    const DenseMatrix g1 = matmul(transpose(h1), lr.grad);
    const DenseMatrix g0 = matmul(transpose(f.x), relu_backward(pre0, matmul(lr.grad, transpose(l1.self))));
    EXPECT_LE(testing::rel_frobenius(grads[1].self, g1), 1e-14);
    EXPECT_LE(testing::rel_frobenius(grads[0].self, g0), 1e-14);
}

TEST(Backward, SageFirstLayerHasNoSparseProduct) {
    auto f = make_model_fixture(ModelKind::sage, 10, {3, 4, 4, 2}, 0.3, 8);
    EXPECT_EQ(f.model.backward_spmm_layers(), (std::vector<int>{1, 2}));
    std::vector<int> seen;
    testing::exact_gradients(f, [&](int layer, const CsrMatrix& op, const DenseMatrix& d) {
        seen.push_back(layer);
        return spmm(op, d);
    });
    EXPECT_EQ(seen, (std::vector<int>{2, 1}));

    auto g = make_model_fixture(ModelKind::gcn, 10, {3, 4, 2}, 0.3, 8);
    EXPECT_EQ(g.model.backward_spmm_layers(), (std::vector<int>{0, 1}));
}

TEST(Backward, FullSelectionHookIsBitIdentical) {
    for (ModelKind kind : {ModelKind::gcn, ModelKind::sage}) {
        auto f = make_model_fixture(kind, 25, {5, 7, 3}, 0.2, 9);
        const auto exact = testing::flatten(testing::exact_gradients(f), kind);
        const auto full = testing::flatten(
            testing::exact_gradients(f,
                                     [](int, const CsrMatrix& op, const DenseMatrix& d) {
                                         const PairStats s = pair_stats(op, d);
                                         return approx_spmm_topk(op, d, topk_indices(s, s.size()));
                                     }),
            kind);
        EXPECT_EQ(full, exact);
    }
}

TEST(Backward, SageBackwardOperatorColumnNormsScaleWithDegree) {
    const std::vector<CooEntry> star{{0, 1, 1}, {1, 0, 1}, {0, 2, 1}, {2, 0, 1}, {0, 3, 1}, {3, 0, 1}};
    const GraphOperators ops = make_operators(ModelKind::sage, CsrMatrix::from_coo(4, 4, star));
    // Column j of (D⁻¹A)ᵀ is row j of D⁻¹A: deg_j entries of 1/deg_j.
    EXPECT_DOUBLE_EQ(ops.backward_col_norms[0], 1.0 / std::sqrt(3.0));
    EXPECT_DOUBLE_EQ(ops.backward_col_norms[1], 1.0);
}

TEST(Prop1, StochasticBackwardIsUnbiasedAndForwardIsNot) {
    const auto r = testing::prop1_experiment(11, 16000, 8);
    EXPECT_LE(r.backward_final, 0.02);
    for (int c = 0; c < 2; ++c) {
        const double ratio = r.backward_deviation[c + 1] / r.backward_deviation[c];
        EXPECT_GE(ratio, 0.3);
        EXPECT_LE(ratio, 0.8);
    }
    EXPECT_GT(r.forward_deviation, 5.0 * r.backward_final);
}

TEST(MaskedAccuracy, CountsArgmaxMatches) {
    const DenseMatrix logits{{1, 2}, {3, 0}, {0, 5}, {2, 2}};
    const std::vector<int> labels{1, 1, 1, 0};
    EXPECT_DOUBLE_EQ(masked_accuracy(logits, labels, {true, true, true, true}), 0.75);
    EXPECT_DOUBLE_EQ(masked_accuracy(logits, labels, {false, true, false, false}), 0.0);
}

TEST(ModelKind, ParsesNames) {
    EXPECT_EQ(parse_model_kind("sage"), ModelKind::sage);
    EXPECT_EQ(to_string(ModelKind::gcn), "gcn");
    EXPECT_THROW(parse_model_kind("gat"), ConfigError);
}

}  // namespace
}  // namespace rsc
