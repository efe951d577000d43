#include "rsc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "rsc/errors.hpp"

namespace rsc {

std::string to_string(BackwardMode mode) {
    switch (mode) {
        case BackwardMode::exact: return "exact";
        case BackwardMode::rsc: return "rsc";
        case BackwardMode::uniform: return "uniform";
    }
    return "exact";
}

BackwardMode parse_backward_mode(const std::string& name) {
    if (name == "exact") return BackwardMode::exact;
    if (name == "rsc") return BackwardMode::rsc;
    if (name == "uniform") return BackwardMode::uniform;
    throw ConfigError("unknown mode '" + name + "' (expected exact, rsc or uniform)");
}

void validate_policy(const BackwardPolicy& policy) {
    if (policy.mode != BackwardMode::exact && !(policy.budget_c > 0.0 && policy.budget_c < 1.0))
        throw ConfigError("budget C must lie in (0, 1)");
    if (!(policy.alpha > 0.0 && policy.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (policy.alloc_interval < 1 || policy.cache_interval < 1) throw ConfigError("intervals must be at least 1");
    if (!(policy.switch_fraction > 0.0 && policy.switch_fraction <= 1.0))
        throw ConfigError("switch fraction must lie in (0, 1]");
}

bool switch_active(Index step, Index total_steps, double switch_fraction) {
    const auto cutoff = static_cast<Index>(std::floor(switch_fraction * static_cast<double>(total_steps)));
    return step < cutoff;
}

AllocationPlan refresh_allocation(const BackwardPolicy& policy, std::span<const LayerProfile> profiles) {
    if (policy.mode == BackwardMode::rsc) return greedy_allocate(profiles, policy.budget_c, policy.alpha);
    if (profiles.empty()) throw ShapeError("refresh_allocation: no layer profiles");
    const Index n = profiles.front().pairs();
    auto k = std::clamp<Index>(static_cast<Index>(std::llround(policy.budget_c * static_cast<double>(n))), 1, n);
    // Same k everywhere, lowered until the FLOPs fit so the comparison with greedy is at equal budget.
    std::vector<std::uint64_t> prefix(n + 1, 0);  // FLOPs of top-j summed over layers
    std::uint64_t total = 0;
    for (const auto& p : profiles) {
        const auto order = rank_pairs(p.products);
        std::uint64_t run = 0;
        for (Index j = 0; j < n; ++j) {
            run += static_cast<std::uint64_t>(p.nnz_per_col[order[j]]) * p.d;
            prefix[j + 1] += run;
        }
        total += run;
    }
    const auto budget = static_cast<std::uint64_t>(std::floor(policy.budget_c * static_cast<double>(total)));
    while (k > 1 && prefix[k] > budget) --k;
    AllocationPlan plan = fixed_allocation(profiles, std::vector<Index>(profiles.size(), k), policy.budget_c);
    plan.alpha = policy.alpha;
    return plan;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Upstream-gradient statistics recorded at each backward sparse product.
struct Snapshot {
    std::vector<double> row_norms;
    double frobenius = 0.0;
    Index d = 0;
};

std::vector<double> pair_products(std::span<const double> col_norms, std::span<const double> row_norms) {
    std::vector<double> out(col_norms.size());
    for (Index i = 0; i < out.size(); ++i) out[i] = col_norms[i] * row_norms[i];
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const GraphDataset& data) {
    validate_policy(config.policy);
    validate_dataset(data);
    if (config.layers < 1 || config.hidden < 1 || config.epochs < 1)
        throw ConfigError("layers, hidden and epochs must be positive");

    const auto start = Clock::now();
    const GraphOperators ops = make_operators(config.model, data.adjacency);
    const Index n = data.nodes();

    std::vector<Index> dims{data.features.cols()};
    for (Index l = 0; l + 1 < config.layers; ++l) dims.push_back(config.hidden);
    dims.push_back(static_cast<Index>(data.num_classes()));

    const Rng root(config.seed);
    Rng init_rng = root.split("init");
    GnnModel model(config.model, dims, init_rng);
    std::vector<AdamState> adam(model.parameters().size());
    const AdamOptions adam_opts{config.lr};

    const std::vector<int> op_layers = model.backward_spmm_layers();
    std::map<int, Index> op_slot;
    for (Index s = 0; s < op_layers.size(); ++s) op_slot[op_layers[s]] = s;

    const BackwardPolicy& policy = config.policy;
    std::map<int, Snapshot> snapshots;
    std::optional<AllocationPlan> plan;
    std::int64_t plan_step = -1;
    LayerCache cache;

    // Stability tracking: recent top-k selections per layer.
    std::map<int, std::deque<std::pair<std::int64_t, TopKSelection>>> recent;

    TrainResult result;
    result.history.reserve(config.epochs);

    for (Index t = 0; t < config.epochs; ++t) {
        const auto step = static_cast<std::int64_t>(t);
        EpochRecord rec;
        rec.epoch = static_cast<int>(t);

        const DenseMatrix logits = model.forward(ops, data.features);
        LossResult loss = softmax_cross_entropy(logits, data.labels, data.train_mask);
        if (!std::isfinite(loss.loss) || !all_finite(logits))
            throw NumericError("non-finite loss at epoch " + std::to_string(t) + " (loss=" +
                               format_double(loss.loss) + ")");
        rec.loss = loss.loss;
        rec.train_acc = masked_accuracy(logits, data.labels, data.train_mask);
        rec.val_acc = masked_accuracy(logits, data.labels, data.val_mask);
        rec.test_acc = masked_accuracy(logits, data.labels, data.test_mask);

        const bool approx = policy.mode != BackwardMode::exact &&
                            switch_active(t, config.epochs, policy.switch_fraction) &&
                            snapshots.size() == op_layers.size();
        rec.approx_active = approx;

        if (approx && (!plan || (t % policy.alloc_interval == 0 && plan_step != step))) {
            const auto alloc_start = Clock::now();
            std::vector<LayerProfile> profiles;
            for (int layer : op_layers) {
                const Snapshot& snap = snapshots.at(layer);
                PairStats stats = pair_stats_from_norms(ops.backward_col_norms, snap.row_norms,
                                                        ops.backward_col_nnz,
                                                        ops.backward_frobenius * snap.frobenius);
                profiles.push_back(make_layer_profile(layer, stats, snap.d));
            }
            if (config.force_full_selection) {
                const std::vector<Index> full(profiles.size(), n);
                plan = fixed_allocation(profiles, full, policy.budget_c);
            } else {
                plan = refresh_allocation(policy, profiles);
            }
            plan_step = step;
            cache.invalidate();
            result.plans.push_back(*plan);
            rec.alloc_ms = ms_since(alloc_start);
        }

        FlopCounter flops;
        std::uint64_t exact_equiv = 0;
        std::vector<std::pair<int, std::vector<double>>> step_products;

        SpmmHook hook = [&](int layer, const CsrMatrix& op, const DenseMatrix& upstream) {
            Snapshot snap{row_norms(upstream), frobenius_norm(upstream), upstream.cols()};
            exact_equiv += static_cast<std::uint64_t>(op.nnz()) * upstream.cols();
            DenseMatrix out;
            if (approx) {
                const Index slot = op_slot.at(layer);
                const auto& entry = cache.get(layer, op, step, policy.cache_interval, [&] {
                    if (plan_step == step) return plan->selections[slot];
                    // Re-ranked between refreshes: keep the plan's k but never its layer FLOPs.
                    const std::uint64_t allowance =
                        selection_flops(plan->selections[slot], ops.backward_col_nnz, snap.d);
                    return topk_within_flops(pair_products(ops.backward_col_norms, snap.row_norms),
                                             ops.backward_col_nnz, snap.d, plan->k_per_layer[slot], allowance);
                });
                out = approx_spmm_sliced(entry.slice, upstream, &flops);
            } else {
                out = spmm(op, upstream, &flops);
            }
            if (config.track_stability)
                step_products.emplace_back(layer, pair_products(ops.backward_col_norms, snap.row_norms));
            snapshots[layer] = std::move(snap);
            return out;
        };

        const std::vector<LayerGrads> grads = model.backward(ops, loss.grad, hook);
        auto params = model.parameters();
        const auto grad_ptrs = GnnModel::gradients(grads, config.model);
        for (Index p = 0; p < params.size(); ++p) adam_step(*params[p], *grad_ptrs[p], adam[p], adam_opts);

        rec.bwd_spmm_flops = flops.count;
        rec.bwd_spmm_flops_exact_equiv = exact_equiv;
        rec.mean_auc_stability = std::numeric_limits<double>::quiet_NaN();

        if (config.track_stability) {
            double auc_sum = 0.0;
            int auc_count = 0;
            for (auto& [layer, products] : step_products) {
                auto& window = recent[layer];
                if (!window.empty() && window.front().first == step - static_cast<std::int64_t>(config.stability_lag)) {
                    const TopKSelection& prev = window.front().second;
                    StabilitySample sample{static_cast<int>(t), layer, 0.0, prev.k > 0 && prev.k < n};
                    if (sample.defined) {
                        sample.auc = auc_match_score(prev, products);
                        auc_sum += sample.auc;
                        ++auc_count;
                    } else {
                        sample.auc = std::numeric_limits<double>::quiet_NaN();
                    }
                    result.stability.push_back(sample);
                    window.pop_front();
                }
                const Index k = plan ? plan->k_per_layer[op_slot.at(layer)]
                                     : std::clamp<Index>(static_cast<Index>(std::llround(
                                                             policy.budget_c * static_cast<double>(n))),
                                                         1, n);
                window.emplace_back(step, topk_indices(products, k, step));
            }
            if (auc_count > 0) rec.mean_auc_stability = auc_sum / auc_count;
        }

        result.bwd_flops += rec.bwd_spmm_flops;
        result.bwd_flops_exact_equiv += rec.bwd_spmm_flops_exact_equiv;
        if (approx) {
            result.approx_phase_flops += rec.bwd_spmm_flops;
            result.approx_phase_exact_equiv += rec.bwd_spmm_flops_exact_equiv;
        }
        if (result.best_epoch < 0 || rec.val_acc > result.best_val_acc) {
            result.best_epoch = rec.epoch;
            result.best_val_acc = rec.val_acc;
            result.test_at_best_val = rec.test_acc;
        }
        rec.elapsed_ms = ms_since(start);
        result.history.push_back(rec);
    }

    result.slicings = cache.slicings();
    result.wall_ms = ms_since(start);
    return result;
}

}  // namespace rsc
