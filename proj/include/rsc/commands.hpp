#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsc/data_io.hpp"
#include "rsc/train.hpp"

namespace rsc {

/// Training configuration plus the dataset source (files or SBM parameters).
struct ExperimentConfig {
    TrainConfig train;
    std::optional<DatasetPaths> dataset;  // SBM fixture when empty
    SbmParams sbm;
};

/// Applies a flat JSON object whose keys match the config field names
/// (model, layers, hidden, epochs, lr, seed, mode, budget_C, alpha, alloc_interval,
/// cache_interval, switch_fraction, edges, features, labels, masks, sbm_nodes,
/// sbm_classes, sbm_p_in, sbm_p_out, sbm_feat_dim, sbm_noise). Unknown keys are errors.
void apply_config_json(ExperimentConfig& config, const std::string& json_text);
void apply_config_file(ExperimentConfig& config, const std::string& path);

GraphDataset build_dataset(const ExperimentConfig& config);

struct TrainSummary {
    TrainResult result;
    double flop_ratio = 1.0;               // bwd FLOPs / exact-equivalent, whole run
    double approx_phase_flop_ratio = 1.0;  // same, restricted to approximated epochs
};

/// Trains, writes the metrics CSV to `csv_out` and a one-line summary to `summary_out`.
TrainSummary cmd_train(const ExperimentConfig& config, std::ostream& csv_out, std::ostream& summary_out);

struct BenchParams {
    Index n = 4096;
    double density = 0.002;
    Index d = 64;
    std::vector<double> k_fractions{0.1, 0.3, 0.5, 1.0};
    int trials = 20;
    int warmup = 3;
    std::uint64_t seed = 0;
};

struct BenchRow {
    double k_fraction = 1.0;
    Index k = 0;
    double exact_ms = 0.0;
    double approx_ms = 0.0;
    std::uint64_t exact_flops = 0;
    std::uint64_t approx_flops = 0;
    double relative_error = 0.0;
};

/// Random square CSR of the given density (exact spmm vs top-k spmm). Writes CSV.
std::vector<BenchRow> cmd_bench_spmm(const BenchParams& params, std::ostream& out);

/// Trains with caching disabled and writes "epoch,layer,auc,defined" rows comparing
/// the top-k set at step t with the pair scores at step t + 10.
std::vector<StabilitySample> cmd_stability(const ExperimentConfig& config, std::ostream& out);

struct AllocateOutput {
    std::vector<LayerProfile> profiles;
    AllocationPlan plan;
};

/// Reads a profile CSV (layer,pair_index,product,nnz,d[,frob_denominator]) and runs
/// the greedy allocation. Writes "layer_id,k_l,captured_mass,flops" rows followed by
/// a "# status=..." line.
AllocateOutput cmd_allocate(std::istream& profile_csv, double budget_c, double alpha, std::ostream& out);

std::vector<LayerProfile> read_profile_csv(std::istream& in);
void write_profile_csv(const std::vector<LayerProfile>& profiles, std::ostream& out);

}  // namespace rsc
