#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsc/approx.hpp"

namespace rsc {

/// Statistics of one approximated backward SpMM (Ãᵀ · ∇H) used for allocation.
struct LayerProfile {
    int layer_id = 0;
    std::vector<double> products;     // per-pair norm products
    std::vector<Index> nnz_per_col;   // #nnz of each column of the sparse operand
    Index d = 1;                      // columns of the dense operand
    double frob_denominator = 1.0;    // ‖Ã‖_F · ‖∇H‖_F

    Index pairs() const noexcept { return products.size(); }
    std::uint64_t full_flops() const noexcept;  // |E| · d
};

LayerProfile make_layer_profile(int layer_id, const PairStats& stats, Index d);

struct AllocationPlan {
    std::vector<Index> k_per_layer;
    std::vector<TopKSelection> selections;
    double budget_c = 1.0;
    double alpha = 0.0;
    Index step = 1;
    std::uint64_t achieved_flops = 0;
    std::uint64_t budget_flops = 0;
    bool feasible = true;
    int iterations = 0;
};

/// round(alpha * n_pairs), at least 1.
Index step_quantum(double alpha, Index n_pairs);

/// Σ_l Σ_{i∈Top_{k_l}} #nnz_i · d_l over the plan's selections.
std::uint64_t flops_of_plan(std::span<const LayerProfile> profiles, const AllocationPlan& plan);

/// Captured norm mass Σ_l Σ_{i∈Top_{k_l}} products_i / denominator_l (to be maximized).
double objective_value(std::span<const LayerProfile> profiles, const AllocationPlan& plan);

/// Greedy layer-wise reduction: every layer starts at k_l = |V|; each move removes
/// one step of the smallest remaining pairs from the layer whose captured-mass loss
/// is smallest (ties → lower layer), until the FLOPs fit C · Σ_l |E| d_l. k_l is never
/// pushed below one step. If the floor is reached first the plan is returned with
/// feasible = false.
AllocationPlan greedy_allocate(std::span<const LayerProfile> profiles, double budget_c, double alpha);

/// Brute-force optimum over the same step grid (tiny instances only). Ties go to
/// the lexicographically largest k vector. Throws ShapeError if the grid exceeds
/// 10⁶ points.
AllocationPlan exhaustive_allocate(std::span<const LayerProfile> profiles, double budget_c, double alpha);

/// Plan with k_l fixed by the caller (selections are the top-k_l of each profile).
AllocationPlan fixed_allocation(std::span<const LayerProfile> profiles, std::span<const Index> k_per_layer,
                                double budget_c);

/// Top-k of `products` (ties → lower index), then trimmed from the low-product end
/// until Σ nnz_i · d fits `max_flops`. Never returns fewer than one pair.
TopKSelection topk_within_flops(std::span<const double> products, std::span<const Index> nnz_per_col, Index d,
                                Index k, std::uint64_t max_flops);

/// Σ_{i∈sel} nnz_i · d.
std::uint64_t selection_flops(const TopKSelection& sel, std::span<const Index> nnz_per_col, Index d);

/// ROC-AUC of `current_scores` against membership in `previous.indices`. Tied scores
/// count one half. Throws ShapeError when every or no pair is a member.
double auc_match_score(const TopKSelection& previous, std::span<const double> current_scores);

}  // namespace rsc
