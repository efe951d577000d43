#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rsc/allocator.hpp"
#include "rsc/data_io.hpp"
#include "rsc/gnn.hpp"

namespace rsc {

enum class BackwardMode { exact, rsc, uniform };

std::string to_string(BackwardMode mode);
BackwardMode parse_backward_mode(const std::string& name);

/// How the backward sparse products are computed during training.
struct BackwardPolicy {
    BackwardMode mode = BackwardMode::exact;
    double budget_c = 0.1;
    double alpha = 0.02;
    Index alloc_interval = 10;
    Index cache_interval = 10;
    double switch_fraction = 0.8;
};

void validate_policy(const BackwardPolicy& policy);

/// True while the approximation is in use: step < floor(fraction * total_steps).
bool switch_active(Index step, Index total_steps, double switch_fraction);

/// rsc: greedy allocation over the profiles. uniform: k_l = round(C |V|) for every
/// layer, lowered in lockstep while the FLOPs exceed floor(C · total). Selections are
/// the per-profile top-k_l.
AllocationPlan refresh_allocation(const BackwardPolicy& policy, std::span<const LayerProfile> profiles);

/// Per-layer column-sliced backward operators reused for `cache_interval` steps.
class LayerCache {
public:
    struct Entry {
        ColumnSlice slice;
        TopKSelection selection;
        std::int64_t source_step = -1;
    };

    /// Returns the cached entry for `layer` when step - source_step < interval;
    /// otherwise slices `op` by the selection `select()` returns and stores it.
    template <typename SelectFn>
    const Entry& get(int layer, const CsrMatrix& op, std::int64_t step, Index interval, SelectFn&& select) {
        auto it = entries_.find(layer);
        if (it != entries_.end() && step - it->second.source_step < static_cast<std::int64_t>(interval))
            return it->second;
        Entry entry;
        entry.selection = select();
        entry.selection.source_step = step;
        entry.slice = select_columns(op, entry.selection.indices);
        entry.source_step = step;
        ++slicings_;
        return entries_[layer] = std::move(entry);
    }

    void invalidate() noexcept { entries_.clear(); }
    Index slicings() const noexcept { return slicings_; }

private:
    std::map<int, Entry> entries_;
    Index slicings_ = 0;
};

struct TrainConfig {
    ModelKind model = ModelKind::gcn;
    Index layers = 2;
    Index hidden = 64;
    Index epochs = 200;
    double lr = 0.01;
    std::uint64_t seed = 0;
    BackwardPolicy policy;

    // Diagnostics.
    bool force_full_selection = false;  // approximate path with k_l = |V|
    bool track_stability = false;       // AUC of top-k sets between steps t and t + stability_lag
    Index stability_lag = 10;
};

struct StabilitySample {
    int epoch = 0;  // the later step t + lag
    int layer = 0;
    double auc = 0.0;
    bool defined = true;  // false when k_l = 0 or |V|
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::vector<StabilitySample> stability;
    std::vector<AllocationPlan> plans;  // in refresh order
    int best_epoch = -1;
    double best_val_acc = 0.0;
    double test_at_best_val = 0.0;
    std::uint64_t bwd_flops = 0;
    std::uint64_t bwd_flops_exact_equiv = 0;
    std::uint64_t approx_phase_flops = 0;
    std::uint64_t approx_phase_exact_equiv = 0;
    Index slicings = 0;
    double wall_ms = 0.0;
};

/// Full-batch training: exact forward, masked cross-entropy, policy-controlled
/// backward, Adam. Allocation profiles come from the previous step's upstream
/// gradients, so the first step always runs exactly. Throws NumericError on a
/// non-finite loss.
TrainResult train(const TrainConfig& config, const GraphDataset& data);

}  // namespace rsc
