#include "rsc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rsc/errors.hpp"

namespace rsc {

namespace {

// Prefix sums of products and nnz along a layer's descending-product order, so
// Top_k mass and FLOPs are O(1) lookups.
struct RankedLayer {
    std::vector<Index> order;
    std::vector<double> mass;          // mass[k] = Σ of the k largest products / denominator
    std::vector<std::uint64_t> nnz;    // nnz[k] = Σ #nnz over the same k pairs
    Index d = 1;
};

RankedLayer rank_layer(const LayerProfile& p) {
    if (p.nnz_per_col.size() != p.products.size())
        throw ShapeError("LayerProfile: products and nnz_per_col differ in length");
    RankedLayer r;
    r.order = rank_pairs(p.products);
    r.d = p.d;
    const Index n = p.pairs();
    const double inv = p.frob_denominator > 0.0 ? 1.0 / p.frob_denominator : 0.0;
    r.mass.assign(n + 1, 0.0);
    r.nnz.assign(n + 1, 0);
    for (Index j = 0; j < n; ++j) {
        const Index i = r.order[j];
        r.mass[j + 1] = r.mass[j] + p.products[i] * inv;
        r.nnz[j + 1] = r.nnz[j] + p.nnz_per_col[i];
    }
    return r;
}

Index common_pair_count(std::span<const LayerProfile> profiles) {
    if (profiles.empty()) throw ShapeError("allocation: no layer profiles");
    const Index n = profiles.front().pairs();
    for (const auto& p : profiles) {
        if (p.pairs() != n) throw ShapeError("allocation: layers disagree on |V|");
        if (p.d < 1) throw ShapeError("allocation: layer dimension must be at least 1");
    }
    if (n == 0) throw ShapeError("allocation: empty profiles");
    return n;
}

void check_budget(double budget_c, double alpha) {
    if (!(budget_c > 0.0 && budget_c < 1.0)) throw ShapeError("allocation: budget C must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ShapeError("allocation: step size alpha must lie in (0, 1)");
}

std::uint64_t total_flops(std::span<const LayerProfile> profiles) {
    std::uint64_t total = 0;
    for (const auto& p : profiles) total += p.full_flops();
    return total;
}

std::uint64_t budget_for(double budget_c, std::uint64_t total) {
    return static_cast<std::uint64_t>(std::floor(budget_c * static_cast<double>(total)));
}

TopKSelection selection_from(const RankedLayer& r, Index k) {
    TopKSelection sel;
    sel.k = k;
    sel.indices.assign(r.order.begin(), r.order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(sel.indices.begin(), sel.indices.end());
    return sel;
}

void finish_plan(AllocationPlan& plan, const std::vector<RankedLayer>& ranked) {
    plan.selections.clear();
    plan.achieved_flops = 0;
    for (Index l = 0; l < ranked.size(); ++l) {
        plan.selections.push_back(selection_from(ranked[l], plan.k_per_layer[l]));
        plan.achieved_flops += ranked[l].nnz[plan.k_per_layer[l]] * ranked[l].d;
    }
}

}  // namespace

std::uint64_t LayerProfile::full_flops() const noexcept {
    std::uint64_t edges = 0;
    for (Index c : nnz_per_col) edges += c;
    return edges * d;
}

LayerProfile make_layer_profile(int layer_id, const PairStats& stats, Index d) {
    return {layer_id, stats.products, stats.nnz_per_col, d, stats.total_norm_product};
}

Index step_quantum(double alpha, Index n_pairs) {
    const auto step = static_cast<Index>(std::llround(alpha * static_cast<double>(n_pairs)));
    return std::max<Index>(1, step);
}

std::uint64_t flops_of_plan(std::span<const LayerProfile> profiles, const AllocationPlan& plan) {
    if (plan.selections.size() != profiles.size() || plan.k_per_layer.size() != profiles.size())
        throw ShapeError("flops_of_plan: plan does not cover every layer");
    std::uint64_t flops = 0;
    for (Index l = 0; l < profiles.size(); ++l) {
        const auto& sel = plan.selections[l];
        if (sel.indices.size() != plan.k_per_layer[l]) throw ShapeError("flops_of_plan: selection size != k_l");
        for (Index i : sel.indices) {
            if (i >= profiles[l].pairs()) throw ShapeError("flops_of_plan: selection index out of range");
            flops += static_cast<std::uint64_t>(profiles[l].nnz_per_col[i]) * profiles[l].d;
        }
    }
    return flops;
}

double objective_value(std::span<const LayerProfile> profiles, const AllocationPlan& plan) {
    if (plan.selections.size() != profiles.size()) throw ShapeError("objective_value: plan does not cover every layer");
    double total = 0.0;
    for (Index l = 0; l < profiles.size(); ++l) {
        const auto& p = profiles[l];
        if (p.frob_denominator <= 0.0) continue;
        double layer = 0.0;
        for (Index i : plan.selections[l].indices) layer += p.products[i];
        total += layer / p.frob_denominator;
    }
    return total;
}

AllocationPlan greedy_allocate(std::span<const LayerProfile> profiles, double budget_c, double alpha) {
    check_budget(budget_c, alpha);
    const Index n = common_pair_count(profiles);

    std::vector<RankedLayer> ranked;
    ranked.reserve(profiles.size());
    for (const auto& p : profiles) ranked.push_back(rank_layer(p));

    AllocationPlan plan;
    plan.budget_c = budget_c;
    plan.alpha = alpha;
    plan.step = step_quantum(alpha, n);
    plan.k_per_layer.assign(profiles.size(), n);

    const std::uint64_t total = total_flops(profiles);
    plan.budget_flops = budget_for(budget_c, total);
    std::uint64_t spent = total;

    while (spent > plan.budget_flops) {
        Index best = profiles.size();
        double best_loss = 0.0;
        for (Index l = 0; l < profiles.size(); ++l) {
            const Index k = plan.k_per_layer[l];
            if (k < 2 * plan.step) continue;  // would drop below one step
            const double loss = ranked[l].mass[k] - ranked[l].mass[k - plan.step];
            if (best == profiles.size() || loss < best_loss) {
                best = l;
                best_loss = loss;
            }
        }
        if (best == profiles.size()) {
            plan.feasible = false;
            break;
        }
        const Index k = plan.k_per_layer[best];
        spent -= (ranked[best].nnz[k] - ranked[best].nnz[k - plan.step]) * ranked[best].d;
        plan.k_per_layer[best] = k - plan.step;
        ++plan.iterations;
    }

    finish_plan(plan, ranked);
    return plan;
}

AllocationPlan exhaustive_allocate(std::span<const LayerProfile> profiles, double budget_c, double alpha) {
    check_budget(budget_c, alpha);
    const Index n = common_pair_count(profiles);
    const Index step = step_quantum(alpha, n);

    // Grid per layer: n, n - step, ... down to the last value that is >= step.
    std::vector<Index> grid;
    for (Index k = n;; k -= step) {
        grid.push_back(k);
        if (k < 2 * step) break;
    }
    double points = 1.0;
    for (Index l = 0; l < profiles.size(); ++l) points *= static_cast<double>(grid.size());
    if (points > 1e6) throw ShapeError("exhaustive_allocate: instance too large (" + std::to_string(points) + " points)");

    std::vector<RankedLayer> ranked;
    for (const auto& p : profiles) ranked.push_back(rank_layer(p));
    const std::uint64_t budget = budget_for(budget_c, total_flops(profiles));

    AllocationPlan best;
    best.budget_c = budget_c;
    best.alpha = alpha;
    best.step = step;
    best.budget_flops = budget;
    bool found = false;
    double best_value = 0.0;

    const Index L = profiles.size();
    std::vector<Index> pos(L, 0);  // index into grid per layer
    std::vector<Index> k(L);
    while (true) {
        std::uint64_t flops = 0;
        double value = 0.0;
        for (Index l = 0; l < L; ++l) {
            k[l] = grid[pos[l]];
            flops += ranked[l].nnz[k[l]] * ranked[l].d;
            value += ranked[l].mass[k[l]];
        }
        if (flops <= budget) {
            const bool better = !found || value > best_value ||
                                (value == best_value && std::lexicographical_compare(
                                                            best.k_per_layer.begin(), best.k_per_layer.end(),
                                                            k.begin(), k.end()));
            if (better) {
                found = true;
                best_value = value;
                best.k_per_layer = k;
            }
        }
        // Odometer increment over the grid; done once the first layer wraps.
        Index l = L;
        bool wrapped = true;
        while (l > 0) {
            --l;
            if (++pos[l] < grid.size()) {
                wrapped = false;
                break;
            }
            pos[l] = 0;
        }
        if (wrapped) break;
    }

    if (!found) {
        best.feasible = false;
        best.k_per_layer.assign(L, grid.back());
    }
    finish_plan(best, ranked);
    return best;
}

AllocationPlan fixed_allocation(std::span<const LayerProfile> profiles, std::span<const Index> k_per_layer,
                                double budget_c) {
    const Index n = common_pair_count(profiles);
    if (k_per_layer.size() != profiles.size()) throw ShapeError("fixed_allocation: one k per layer required");
    AllocationPlan plan;
    plan.budget_c = budget_c;
    plan.k_per_layer.assign(k_per_layer.begin(), k_per_layer.end());
    std::vector<RankedLayer> ranked;
    for (Index l = 0; l < profiles.size(); ++l) {
        if (k_per_layer[l] < 1 || k_per_layer[l] > n) throw ShapeError("fixed_allocation: k_l outside [1, |V|]");
        ranked.push_back(rank_layer(profiles[l]));
    }
    plan.budget_flops = budget_for(budget_c, total_flops(profiles));
    finish_plan(plan, ranked);
    plan.feasible = plan.achieved_flops <= plan.budget_flops;
    return plan;
}

TopKSelection topk_within_flops(std::span<const double> products, std::span<const Index> nnz_per_col, Index d,
                                Index k, std::uint64_t max_flops) {
    if (products.size() != nnz_per_col.size()) throw ShapeError("topk_within_flops: length mismatch");
    if (k < 1 || k > products.size()) throw ShapeError("topk_within_flops: k outside [1, n]");
    const std::vector<Index> order = rank_pairs(products);
    std::uint64_t flops = 0;
    for (Index j = 0; j < k; ++j) flops += static_cast<std::uint64_t>(nnz_per_col[order[j]]) * d;
    while (k > 1 && flops > max_flops) {
        --k;
        flops -= static_cast<std::uint64_t>(nnz_per_col[order[k]]) * d;
    }
    std::vector<Index> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(picked.begin(), picked.end());
    return TopKSelection{std::move(picked), k, -1};
}

std::uint64_t selection_flops(const TopKSelection& sel, std::span<const Index> nnz_per_col, Index d) {
    std::uint64_t flops = 0;
    for (Index i : sel.indices) {
        if (i >= nnz_per_col.size()) throw ShapeError("selection_flops: index out of range");
        flops += static_cast<std::uint64_t>(nnz_per_col[i]) * d;
    }
    return flops;
}

double auc_match_score(const TopKSelection& previous, std::span<const double> current_scores) {
    const Index n = current_scores.size();
    std::vector<bool> member(n, false);
    for (Index i : previous.indices) {
        if (i >= n) throw ShapeError("auc_match_score: selection index out of range");
        member[i] = true;
    }
    const auto positives = static_cast<Index>(std::count(member.begin(), member.end(), true));
    if (positives == 0 || positives == n)
        throw ShapeError("auc_match_score: undefined when the selection is empty or covers every pair");

    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index x, Index y) { return current_scores[x] < current_scores[y]; });

    // Mann-Whitney U with mid-ranks for ties.
    double positive_rank_sum = 0.0;
    Index i = 0;
    while (i < n) {
        Index j = i + 1;
        while (j < n && current_scores[order[j]] == current_scores[order[i]]) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (Index t = i; t < j; ++t)
            if (member[order[t]]) positive_rank_sum += mid_rank;
        i = j;
    }
    const double np = static_cast<double>(positives);
    const double nn = static_cast<double>(n - positives);
    return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace rsc
