#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsc/dense.hpp"
#include "rsc/sparse.hpp"

namespace rsc {

/// Node-classification graph. Masks are disjoint; every class appears in train.
struct GraphDataset {
    CsrMatrix adjacency;  // binary, symmetric, no self-loops
    DenseMatrix features;
    std::vector<int> labels;
    std::vector<bool> train_mask;
    std::vector<bool> val_mask;
    std::vector<bool> test_mask;

    Index nodes() const noexcept { return adjacency.rows(); }
    int num_classes() const;
};

/// Throws ConfigError if lengths disagree, masks overlap or are empty, or a class
/// is missing from the training split.
void validate_dataset(const GraphDataset& data);

/// "src dst" per line, 0-indexed; '#' starts a comment. A "# nodes N" line fixes
/// the node count, otherwise it is 1 + the largest index. Output is symmetric and
/// binary with duplicates and self-loops dropped.
CsrMatrix parse_edge_list(std::istream& in, const std::string& source = "<stream>");
CsrMatrix load_edge_list(const std::filesystem::path& path);
void write_edge_list(const CsrMatrix& adjacency, const std::filesystem::path& path);

DenseMatrix load_features_csv(const std::filesystem::path& path, std::optional<Index> expected_rows = {});
std::vector<int> load_labels(const std::filesystem::path& path, std::optional<Index> expected_rows = {});

struct MaskSet {
    std::vector<bool> train;
    std::vector<bool> val;
    std::vector<bool> test;
};

/// One of train / val / test / none per line.
MaskSet load_masks(const std::filesystem::path& path, std::optional<Index> expected_rows = {});

struct DatasetPaths {
    std::filesystem::path edges;
    std::filesystem::path features;
    std::filesystem::path labels;
    std::filesystem::path masks;
};

GraphDataset load_dataset(const DatasetPaths& paths);

struct SbmParams {
    Index nodes = 2000;
    int classes = 4;
    double p_in = 0.01;
    double p_out = 0.001;
    Index feat_dim = 16;
    double noise = 1.0;
    std::uint64_t seed = 0;
};

/// Stochastic block model with balanced random class assignment. Features are
/// the one-hot class vector (padded to feat_dim) plus noise * N(0, 1); masks are a
/// per-class 60/20/20 split. Independent Rng streams drive labels, edges,
/// features and masks.
GraphDataset generate_sbm(const SbmParams& params);

/// One row per epoch of training.
struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double test_acc = 0.0;
    std::uint64_t bwd_spmm_flops = 0;
    std::uint64_t bwd_spmm_flops_exact_equiv = 0;
    double alloc_ms = 0.0;
    double elapsed_ms = 0.0;
    bool approx_active = false;
    double mean_auc_stability = 0.0;  // NaN when no sample was taken this epoch
};

inline constexpr const char* kMetricsHeader =
    "epoch,loss,train_acc,val_acc,test_acc,bwd_spmm_flops,bwd_spmm_flops_exact_equiv,alloc_ms,elapsed_ms,"
    "approx_active,mean_auc_stability";

void write_metrics_csv(const std::vector<EpochRecord>& history, std::ostream& out);
void write_metrics_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);
std::vector<EpochRecord> read_metrics_csv(std::istream& in);

/// Shortest decimal text that parses back to the same double ("nan" for NaN).
std::string format_double(double value);

}  // namespace rsc
