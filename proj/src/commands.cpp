#include "rsc/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rsc/errors.hpp"

namespace rsc {

namespace {

using Clock = std::chrono::steady_clock;

template <typename T>
T json_get(const nlohmann::json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const Index n = xs.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

template <typename Fn>
double time_median_ms(Fn&& fn, int trials, int warmup) {
    for (int i = 0; i < warmup; ++i) fn();
    std::vector<double> samples;
    for (int i = 0; i < trials; ++i) {
        const auto start = Clock::now();
        fn();
        samples.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    }
    return median(std::move(samples));
}

}  // namespace

void apply_config_json(ExperimentConfig& config, const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    TrainConfig& t = config.train;
    auto dataset = [&config]() -> DatasetPaths& {
        if (!config.dataset) config.dataset = DatasetPaths{};
        return *config.dataset;
    };
    for (const auto& [key, value] : doc.items()) {
        if (key == "model") t.model = parse_model_kind(json_get<std::string>(value, key));
        else if (key == "layers") t.layers = json_get<Index>(value, key);
        else if (key == "hidden") t.hidden = json_get<Index>(value, key);
        else if (key == "epochs") t.epochs = json_get<Index>(value, key);
        else if (key == "lr") t.lr = json_get<double>(value, key);
        else if (key == "seed") t.seed = json_get<std::uint64_t>(value, key);
        else if (key == "mode") t.policy.mode = parse_backward_mode(json_get<std::string>(value, key));
        else if (key == "budget_C") t.policy.budget_c = json_get<double>(value, key);
        else if (key == "alpha") t.policy.alpha = json_get<double>(value, key);
        else if (key == "alloc_interval") t.policy.alloc_interval = json_get<Index>(value, key);
        else if (key == "cache_interval") t.policy.cache_interval = json_get<Index>(value, key);
        else if (key == "switch_fraction") t.policy.switch_fraction = json_get<double>(value, key);
        else if (key == "edges") dataset().edges = json_get<std::string>(value, key);
        else if (key == "features") dataset().features = json_get<std::string>(value, key);
        else if (key == "labels") dataset().labels = json_get<std::string>(value, key);
        else if (key == "masks") dataset().masks = json_get<std::string>(value, key);
        else if (key == "sbm_nodes") config.sbm.nodes = json_get<Index>(value, key);
        else if (key == "sbm_classes") config.sbm.classes = json_get<int>(value, key);
        else if (key == "sbm_p_in") config.sbm.p_in = json_get<double>(value, key);
        else if (key == "sbm_p_out") config.sbm.p_out = json_get<double>(value, key);
        else if (key == "sbm_feat_dim") config.sbm.feat_dim = json_get<Index>(value, key);
        else if (key == "sbm_noise") config.sbm.noise = json_get<double>(value, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config_json(config, buffer.str());
}

GraphDataset build_dataset(const ExperimentConfig& config) {
    if (!config.dataset) {
        SbmParams sbm = config.sbm;
        sbm.seed = config.train.seed;
        return generate_sbm(sbm);
    }
    const DatasetPaths& p = *config.dataset;
    for (const auto& [name, path] : {std::pair{"edges", p.edges}, std::pair{"features", p.features},
                                     std::pair{"labels", p.labels}, std::pair{"masks", p.masks}}) {
        if (path.empty()) throw ConfigError(std::string("dataset path '") + name + "' is required");
        if (!std::filesystem::exists(path))
            throw ConfigError(std::string("dataset file '") + path.string() + "' does not exist");
    }
    return load_dataset(p);
}

TrainSummary cmd_train(const ExperimentConfig& config, std::ostream& csv_out, std::ostream& summary_out) {
    const GraphDataset data = build_dataset(config);
    TrainSummary summary;
    summary.result = train(config.train, data);
    const TrainResult& r = summary.result;
    if (r.bwd_flops_exact_equiv > 0)
        summary.flop_ratio = static_cast<double>(r.bwd_flops) / static_cast<double>(r.bwd_flops_exact_equiv);
    if (r.approx_phase_exact_equiv > 0)
        summary.approx_phase_flop_ratio =
            static_cast<double>(r.approx_phase_flops) / static_cast<double>(r.approx_phase_exact_equiv);

    write_metrics_csv(r.history, csv_out);
    summary_out << "model=" << to_string(config.train.model) << " mode=" << to_string(config.train.policy.mode)
                << " best_epoch=" << r.best_epoch << " best_val_acc=" << format_double(r.best_val_acc)
                << " test_acc=" << format_double(r.test_at_best_val) << " bwd_spmm_flops=" << r.bwd_flops
                << " exact_equiv_flops=" << r.bwd_flops_exact_equiv
                << " flop_ratio=" << format_double(summary.flop_ratio)
                << " approx_phase_flop_ratio=" << format_double(summary.approx_phase_flop_ratio)
                << " wall_ms=" << format_double(r.wall_ms) << '\n';
    return summary;
}

std::vector<BenchRow> cmd_bench_spmm(const BenchParams& params, std::ostream& out) {
    if (params.n == 0 || params.d == 0 || !(params.density > 0.0 && params.density <= 1.0) || params.trials < 1)
        throw ConfigError("bench-spmm: n, d, trials must be positive and density in (0, 1]");
    Rng rng = Rng(params.seed).split("bench");
    std::vector<CooEntry> entries;
    for (Index i = 0; i < params.n; ++i)
        for (Index j = 0; j < params.n; ++j)
            if (rng.bernoulli(params.density)) entries.push_back({i, j, rng.uniform(0.1, 1.0)});
    const CsrMatrix a = CsrMatrix::from_coo(params.n, params.n, entries);
    DenseMatrix b(params.n, params.d);
    for (double& v : b.data()) v = rng.normal();

    const PairStats stats = pair_stats(a, b);
    FlopCounter exact_flops;
    const DenseMatrix exact = spmm(a, b, &exact_flops);
    const double exact_ms = time_median_ms([&] { (void)spmm(a, b); }, params.trials, params.warmup);

    out << "k_fraction,k,exact_ms,approx_ms,slice_ms,exact_flops,approx_flops,flop_ratio,relative_error\n";
    std::vector<BenchRow> rows;
    for (double f : params.k_fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("bench-spmm: k fractions must lie in (0, 1]");
        BenchRow row;
        row.k_fraction = f;
        row.k = std::clamp<Index>(static_cast<Index>(std::llround(f * static_cast<double>(params.n))), 1, params.n);
        row.exact_ms = exact_ms;
        row.exact_flops = exact_flops.count;
        const TopKSelection sel = topk_indices(stats, row.k);
        const ColumnSlice slice = select_columns(a, sel.indices);
        FlopCounter approx_flops;
        const DenseMatrix approx = approx_spmm_sliced(slice, b, &approx_flops);
        row.approx_flops = approx_flops.count;
        row.relative_error = relative_error(a, b, approx);
        row.approx_ms = time_median_ms([&] { (void)approx_spmm_sliced(slice, b); }, params.trials, params.warmup);
        const double slice_ms =
            time_median_ms([&] { (void)select_columns(a, sel.indices); }, params.trials, params.warmup);
        out << format_double(f) << ',' << row.k << ',' << format_double(row.exact_ms) << ','
            << format_double(row.approx_ms) << ',' << format_double(slice_ms) << ',' << row.exact_flops << ','
            << row.approx_flops << ','
            << format_double(static_cast<double>(row.approx_flops) / static_cast<double>(std::max<std::uint64_t>(1, row.exact_flops)))
            << ',' << format_double(row.relative_error) << '\n';
        rows.push_back(row);
    }
    return rows;
}

std::vector<StabilitySample> cmd_stability(const ExperimentConfig& config, std::ostream& out) {
    ExperimentConfig cfg = config;
    cfg.train.policy.cache_interval = 1;
    cfg.train.track_stability = true;
    const GraphDataset data = build_dataset(cfg);
    const TrainResult result = train(cfg.train, data);
    out << "epoch,layer,auc,defined\n";
    for (const auto& s : result.stability)
        out << s.epoch << ',' << s.layer << ',' << format_double(s.auc) << ',' << (s.defined ? 1 : 0) << '\n';
    return result.stability;
}

std::vector<LayerProfile> read_profile_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("profile CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool has_denominator = false;
    if (line == "layer,pair_index,product,nnz,d,frob_denominator") has_denominator = true;
    else if (line != "layer,pair_index,product,nnz,d")
        throw IoError("profile CSV: header must be layer,pair_index,product,nnz,d[,frob_denominator]");

    struct Row {
        Index pair;
        double product;
        Index nnz;
        Index d;
        double denominator;
    };
    std::map<int, std::vector<Row>> by_layer;
    Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        const Index expected = has_denominator ? 6 : 5;
        if (cells.size() != expected)
            throw IoError("profile CSV line " + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                          " columns");
        try {
            std::size_t used = 0;
            auto as_int = [&](const std::string& s) {
                const long long v = std::stoll(s, &used);
                if (used != s.size() || v < 0) throw std::invalid_argument(s);
                return v;
            };
            auto as_real = [&](const std::string& s) {
                const double v = std::stod(s, &used);
                if (used != s.size() || !(v >= 0.0)) throw std::invalid_argument(s);
                return v;
            };
            const int layer = static_cast<int>(as_int(cells[0]));
            Row row{static_cast<Index>(as_int(cells[1])), as_real(cells[2]), static_cast<Index>(as_int(cells[3])),
                    static_cast<Index>(as_int(cells[4])), has_denominator ? as_real(cells[5]) : 0.0};
            by_layer[layer].push_back(row);
        } catch (const std::exception&) {
            throw IoError("profile CSV line " + std::to_string(line_no) + ": malformed value");
        }
    }
    if (by_layer.empty()) throw IoError("profile CSV: no rows");

    std::vector<LayerProfile> profiles;
    for (auto& [layer, rows] : by_layer) {
        std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.pair < y.pair; });
        LayerProfile p;
        p.layer_id = layer;
        p.d = rows.front().d;
        double sum = 0.0;
        for (Index i = 0; i < rows.size(); ++i) {
            if (rows[i].pair != i) throw IoError("profile CSV: layer " + std::to_string(layer) + " pair indices must be 0..n-1");
            if (rows[i].d != p.d) throw IoError("profile CSV: layer " + std::to_string(layer) + " has inconsistent d");
            p.products.push_back(rows[i].product);
            p.nnz_per_col.push_back(rows[i].nnz);
            sum += rows[i].product;
        }
        p.frob_denominator = has_denominator ? rows.front().denominator : sum;
        profiles.push_back(std::move(p));
    }
    return profiles;
}

void write_profile_csv(const std::vector<LayerProfile>& profiles, std::ostream& out) {
    out << "layer,pair_index,product,nnz,d,frob_denominator\n";
    for (const auto& p : profiles)
        for (Index i = 0; i < p.pairs(); ++i)
            out << p.layer_id << ',' << i << ',' << format_double(p.products[i]) << ',' << p.nnz_per_col[i] << ','
                << p.d << ',' << format_double(p.frob_denominator) << '\n';
}

AllocateOutput cmd_allocate(std::istream& profile_csv, double budget_c, double alpha, std::ostream& out) {
    AllocateOutput result;
    result.profiles = read_profile_csv(profile_csv);
    result.plan = greedy_allocate(result.profiles, budget_c, alpha);
    out << "layer_id,k_l,captured_mass,flops\n";
    for (Index l = 0; l < result.profiles.size(); ++l) {
        const LayerProfile& p = result.profiles[l];
        double mass = 0.0;
        std::uint64_t flops = 0;
        for (Index i : result.plan.selections[l].indices) {
            mass += p.products[i];
            flops += static_cast<std::uint64_t>(p.nnz_per_col[i]) * p.d;
        }
        if (p.frob_denominator > 0.0) mass /= p.frob_denominator;
        out << p.layer_id << ',' << result.plan.k_per_layer[l] << ',' << format_double(mass) << ',' << flops << '\n';
    }
    out << "# status=" << (result.plan.feasible ? "feasible" : "infeasible")
        << " budget_flops=" << result.plan.budget_flops << " achieved_flops=" << result.plan.achieved_flops
        << " step=" << result.plan.step << " iterations=" << result.plan.iterations << '\n';
    return result;
}

}  // namespace rsc
