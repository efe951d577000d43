#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rsc/approx.hpp"
#include "rsc/errors.hpp"
#include "test_util.hpp"

namespace rsc {
namespace {

using testing::example_3x2;
using testing::random_csr;
using testing::random_dense;

TEST(PairStats, Examples) {
    const std::vector<double> cols{1, 2}, rows{3, 1};
    const std::vector<Index> nnz{1, 1};
    const PairStats s = pair_stats_from_norms(cols, rows, nnz, 1.0);
    EXPECT_EQ(s.products, (std::vector<double>{3, 2}));
    EXPECT_DOUBLE_EQ(s.probs[0], 0.6);
    EXPECT_DOUBLE_EQ(s.probs[1], 0.4);

    const PairStats zero = pair_stats(example_3x2(), DenseMatrix(2, 3));
    EXPECT_TRUE(zero.degenerate());
    EXPECT_EQ(zero.probs, (std::vector<double>{0.5, 0.5}));

    const CsrMatrix single(2, 1, {0, 1, 2}, {0, 0}, {1, 2});
    EXPECT_EQ(pair_stats(single, DenseMatrix{{3, 4}}).probs, (std::vector<double>{1.0}));
    EXPECT_THROW(pair_stats(example_3x2(), DenseMatrix(3, 1)), ShapeError);
}

TEST(PairStats, ProbabilitiesAreANormalizedDistribution) {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const CsrMatrix a = random_csr(10, 12, 0.3, rng);
        DenseMatrix b = random_dense(12, 3, rng);
        if (trial % 3 == 0) b.row(trial % 12)[0] = 0.0;
        const PairStats s = pair_stats(a, b);
        if (s.degenerate()) continue;
        EXPECT_NEAR(std::accumulate(s.probs.begin(), s.probs.end(), 0.0), 1.0, 1e-12);
        for (Index i = 0; i < s.size(); ++i) {
            EXPECT_GE(s.probs[i], 0.0);
            EXPECT_EQ(s.probs[i] == 0.0, s.products[i] == 0.0);
        }
    }
}

TEST(TopK, Examples) {
    const std::vector<double> p{3, 2, 5};
    EXPECT_EQ(topk_indices(p, 2).indices, (std::vector<Index>{0, 2}));
    EXPECT_EQ(topk_indices(p, 3).indices, (std::vector<Index>{0, 1, 2}));
    const std::vector<double> tied{1, 1, 1, 1};
    EXPECT_EQ(topk_indices(tied, 2).indices, (std::vector<Index>{0, 1}));
    EXPECT_THROW(topk_indices(p, 0), ShapeError);
    EXPECT_THROW(topk_indices(p, 4), ShapeError);
}

TEST(TopK, RankPairsAgreesWithSelection) {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> p(20);
        for (double& v : p) v = static_cast<double>(rng.below(6));  // many ties
        const auto order = rank_pairs(p);
        const Index k = 1 + rng.below(20);
        std::vector<Index> expected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(expected.begin(), expected.end());
        EXPECT_EQ(topk_indices(p, k).indices, expected);
    }
}

TEST(ApproxTopK, Examples) {
    const DenseMatrix b{{7, 8}, {9, 10}};
    const TopKSelection one{{1}, 1, -1};
    FlopCounter flops;
    EXPECT_EQ(approx_spmm_topk(example_3x2(), b, one, &flops), (DenseMatrix{{0, 0}, {36, 40}, {54, 60}}));
    EXPECT_EQ(flops.count, 2u * 2u);
    EXPECT_EQ(approx_spmm_topk(example_3x2(), b, TopKSelection{}), DenseMatrix(3, 2));
}

TEST(ApproxTopK, FullSelectionIsExact) {
    Rng rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const CsrMatrix a = random_csr(1 + rng.below(30), 1 + rng.below(30), 0.3, rng);
        const DenseMatrix b = random_dense(a.cols(), 4, rng);
        const PairStats s = pair_stats(a, b);
        EXPECT_EQ(approx_spmm_topk(a, b, topk_indices(s, s.size())), spmm(a, b));
    }
}

TEST(ApproxTopK, ComplementSplitRecoversProduct) {
    Rng rng(15);
    for (int trial = 0; trial < 50; ++trial) {
        const CsrMatrix a = random_csr(1 + rng.below(30), 2 + rng.below(30), 0.3, rng);
        const DenseMatrix b = random_dense(a.cols(), 3, rng);
        TopKSelection s, rest;
        for (Index j = 0; j < a.cols(); ++j) (rng.bernoulli(0.4) ? s : rest).indices.push_back(j);
        s.k = s.indices.size();
        rest.k = rest.indices.size();
        DenseMatrix sum = approx_spmm_topk(a, b, s);
        sum += approx_spmm_topk(a, b, rest);
        EXPECT_LE(testing::rel_frobenius(sum, spmm(a, b)), 1e-12);
    }
}

TEST(ApproxTopK, ErrorBoundedByExcludedMass) {
    Rng rng(16);
    for (int trial = 0; trial < 50; ++trial) {
        const CsrMatrix a = random_csr(20, 20, 0.3, rng);
        const DenseMatrix b = random_dense(20, 4, rng);
        const PairStats s = pair_stats(a, b);
        if (s.total_norm_product == 0.0) continue;
        const TopKSelection sel = topk_indices(s, 1 + rng.below(20));
        double excluded = 0.0;
        for (Index i = 0; i < s.size(); ++i)
            if (!std::binary_search(sel.indices.begin(), sel.indices.end(), i)) excluded += s.products[i];
        const double err = relative_error(a, b, approx_spmm_topk(a, b, sel));
        EXPECT_LE(err, excluded / s.total_norm_product + 1e-12);
    }
}

TEST(ApproxTopK, DropOnePairMatchesExcludedOuterProduct) {
    Rng rng(17);
    const CsrMatrix a = random_csr(12, 10, 0.4, rng);
    const DenseMatrix b = random_dense(10, 3, rng);
    const PairStats s = pair_stats(a, b);
    const TopKSelection sel = topk_indices(s, 9);
    Index dropped = 0;
    while (std::binary_search(sel.indices.begin(), sel.indices.end(), dropped)) ++dropped;
    // ‖A[:,j] B[j,:]‖_F = ‖A[:,j]‖ ‖B[j,:]‖ for a rank-1 term.
    const double expected = s.products[dropped] / s.total_norm_product;
    EXPECT_NEAR(relative_error(a, b, approx_spmm_topk(a, b, sel)), expected, 1e-12);
}

TEST(ApproxTopK, ScalingBLeavesSelectionUnchanged) {
    Rng rng(18);
    for (int trial = 0; trial < 20; ++trial) {
        const CsrMatrix a = random_csr(15, 15, 0.3, rng);
        const DenseMatrix b = random_dense(15, 3, rng);
        const Index k = 1 + rng.below(15);
        const double c = std::exp(rng.uniform(-5.0, 5.0));
        EXPECT_EQ(topk_indices(pair_stats(a, b), k).indices, topk_indices(pair_stats(a, c * b), k).indices);
    }
}

TEST(RelativeError, Examples) {
    Rng rng(19);
    const CsrMatrix a = random_csr(6, 5, 0.5, rng);
    const DenseMatrix b = random_dense(5, 2, rng);
    EXPECT_EQ(relative_error(a, b, spmm(a, b)), 0.0);
    EXPECT_DOUBLE_EQ(relative_error(a, b, DenseMatrix(6, 2)),
                     frobenius_norm(spmm(a, b)) / (frobenius_norm(a) * frobenius_norm(b)));
    EXPECT_EQ(relative_error(CsrMatrix::from_coo(2, 2, {}), DenseMatrix(2, 1), DenseMatrix(2, 1)), 0.0);
    EXPECT_THROW(relative_error(CsrMatrix::from_coo(2, 2, {}), DenseMatrix(2, 1), DenseMatrix{{1}, {0}}),
                 NumericError);
}

TEST(ApproxSampled, SingleNonzeroPairIsExact) {
    const CsrMatrix a(2, 3, {0, 1, 2}, {1, 1}, {2, -1});
    const DenseMatrix b{{0, 0}, {3, 4}, {0, 0}};
    Rng rng(20);
    for (int t = 0; t < 10; ++t) EXPECT_EQ(approx_spmm_sampled(a, b, 1, rng), spmm(a, b));
}

TEST(ApproxSampled, DeterministicAndRejectsDegenerateInput) {
    Rng rng(21);
    const CsrMatrix a = random_csr(8, 8, 0.4, rng);
    const DenseMatrix b = random_dense(8, 4, rng);
    Rng r1(5), r2(5);
    EXPECT_EQ(approx_spmm_sampled(a, b, 3, r1), approx_spmm_sampled(a, b, 3, r2));
    EXPECT_THROW(approx_spmm_sampled(a, DenseMatrix(8, 4), 3, r1), NumericError);
}

// Accumulates estimator draws; mean deviation from the exact product.
struct MonteCarlo {
    DenseMatrix sum;
    Index n = 0;
    double deviation(const DenseMatrix& exact) const {
        return testing::rel_frobenius((1.0 / static_cast<double>(n)) * sum, exact);
    }
};

TEST(ApproxSampled, UnbiasedWithInverseSqrtConvergence) {
    Rng rng(22);
    double dev[3] = {0, 0, 0};
    const Index checkpoints[3] = {1000, 4000, 16000};
    for (int inst = 0; inst < 10; ++inst) {
        const CsrMatrix a = random_csr(8, 8, 0.5, rng);
        const DenseMatrix b = random_dense(8, 4, rng);
        const DenseMatrix exact = spmm(a, b);
        const PairStats stats = pair_stats(a, b);
        MonteCarlo mc{DenseMatrix(8, 4)};
        Rng sampler = rng.split(static_cast<std::uint64_t>(inst));
        int c = 0;
        while (c < 3) {
            mc.sum += approx_spmm_sampled(a, b, stats, 2, sampler);
            if (++mc.n == checkpoints[c]) dev[c++] += mc.deviation(exact) / 10.0;
        }
    }
    EXPECT_LE(dev[2], 0.02);
    for (int c = 0; c < 2; ++c) {
        const double ratio = dev[c + 1] / dev[c];
        EXPECT_GE(ratio, 0.3) << "checkpoint " << c;
        EXPECT_LE(ratio, 0.8) << "checkpoint " << c;
    }
}

TEST(ErrorBound, SampleCountFormula) {
    EXPECT_EQ(error_bound_samples(1.0, 1.0, 10, 10, 100.0), 1u);
    // (1 + 1) ln(20) / 0.25 = 23.96...
    EXPECT_EQ(error_bound_samples(1.0, 1.0, 10, 10, 0.5), 24u);
}

TEST(ErrorBound, RankOneOperandsPass) {
    std::vector<CooEntry> e;
    const std::vector<double> u{1, -2, 0.5, 3, 1, 1}, v{2, 1, 1, -1, 0.5};
    for (Index i = 0; i < u.size(); ++i)
        for (Index j = 0; j < v.size(); ++j) e.push_back({i, j, u[i] * v[j]});
    const CsrMatrix a = CsrMatrix::from_coo(6, 5, e);
    DenseMatrix b(5, 3);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 3; ++j) b(i, j) = (1.0 + i) * (j + 0.5);
    Rng rng(23);
    const ErrorBoundReport r = error_bound_check(a, b, 0.25, rng);
    EXPECT_NEAR(r.stable_rank_a, 1.0, 1e-6);
    EXPECT_NEAR(r.stable_rank_b, 1.0, 1e-6);
    EXPECT_TRUE(r.passed);
    EXPECT_LE(r.mean_error, r.threshold);
}

TEST(ErrorBound, HugeEpsilonClampsToOneSample) {
    Rng rng(24);
    const CsrMatrix a = random_csr(6, 6, 0.5, rng);
    const ErrorBoundReport r = error_bound_check(a, random_dense(6, 2, rng), 1e6, rng, 20);
    EXPECT_EQ(r.k, 1u);
    EXPECT_TRUE(r.passed);
}

}  // namespace
}  // namespace rsc
