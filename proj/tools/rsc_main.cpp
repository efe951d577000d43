// Command-line front end: train, bench-spmm, stability, allocate.
//
// Exit codes: 0 success, 2 usage/config/input-file error, 3 runtime or numeric failure.

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsc/commands.hpp"
#include "rsc/errors.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 3;

// CLI values are parsed into a scratch config and copied over the file/default
// config only for flags the user actually passed.
struct ExperimentFlags {
    rsc::ExperimentConfig cli;
    std::string config_path;
    std::string model = "gcn";
    std::string mode = "exact";
    std::string edges, features, labels, masks;
    std::vector<std::pair<CLI::Option*, std::function<void(rsc::ExperimentConfig&)>>> overrides;

    template <typename T>
    void add(CLI::App& app, const std::string& name, T& field, const std::string& help,
             std::function<void(rsc::ExperimentConfig&)> copy) {
        overrides.emplace_back(app.add_option(name, field, help), std::move(copy));
    }

    void attach(CLI::App& app) {
        auto& t = cli.train;
        app.add_option("--config", config_path, "JSON config file (flat keys named like the flags, snake_case)");
        add(app, "--model", model, "gcn or sage", [this](auto& c) { c.train.model = rsc::parse_model_kind(model); });
        add(app, "--layers", t.layers, "number of layers", [this](auto& c) { c.train.layers = cli.train.layers; });
        add(app, "--hidden", t.hidden, "hidden width", [this](auto& c) { c.train.hidden = cli.train.hidden; });
        add(app, "--epochs", t.epochs, "full-graph training steps", [this](auto& c) { c.train.epochs = cli.train.epochs; });
        add(app, "--lr", t.lr, "Adam learning rate", [this](auto& c) { c.train.lr = cli.train.lr; });
        add(app, "--seed", t.seed, "seed for data, init and sampling", [this](auto& c) { c.train.seed = cli.train.seed; });
        add(app, "--mode", mode, "exact, rsc or uniform",
            [this](auto& c) { c.train.policy.mode = rsc::parse_backward_mode(mode); });
        overrides.emplace_back(
            app.add_option("--budget-c,--budget", t.policy.budget_c, "FLOP budget C in (0, 1)"),
            [this](auto& c) { c.train.policy.budget_c = cli.train.policy.budget_c; });
        add(app, "--alpha", t.policy.alpha, "greedy step size as a fraction of |V|",
            [this](auto& c) { c.train.policy.alpha = cli.train.policy.alpha; });
        add(app, "--alloc-interval", t.policy.alloc_interval, "steps between allocations",
            [this](auto& c) { c.train.policy.alloc_interval = cli.train.policy.alloc_interval; });
        add(app, "--cache-interval", t.policy.cache_interval, "steps a sliced operator is reused (1 disables)",
            [this](auto& c) { c.train.policy.cache_interval = cli.train.policy.cache_interval; });
        add(app, "--switch-fraction", t.policy.switch_fraction, "fraction of epochs using the approximation",
            [this](auto& c) { c.train.policy.switch_fraction = cli.train.policy.switch_fraction; });
        auto path_setter = [this](std::string ExperimentFlags::*member, std::filesystem::path rsc::DatasetPaths::*dst) {
            return [this, member, dst](rsc::ExperimentConfig& c) {
                if (!c.dataset) c.dataset = rsc::DatasetPaths{};
                (*c.dataset).*dst = this->*member;
            };
        };
        add(app, "--edges", edges, "edge list path", path_setter(&ExperimentFlags::edges, &rsc::DatasetPaths::edges));
        add(app, "--features", features, "features CSV path",
            path_setter(&ExperimentFlags::features, &rsc::DatasetPaths::features));
        add(app, "--labels", labels, "labels path", path_setter(&ExperimentFlags::labels, &rsc::DatasetPaths::labels));
        add(app, "--masks", masks, "masks path", path_setter(&ExperimentFlags::masks, &rsc::DatasetPaths::masks));
        add(app, "--sbm-nodes", cli.sbm.nodes, "SBM node count", [this](auto& c) { c.sbm.nodes = cli.sbm.nodes; });
        add(app, "--sbm-classes", cli.sbm.classes, "SBM classes", [this](auto& c) { c.sbm.classes = cli.sbm.classes; });
        add(app, "--sbm-p-in", cli.sbm.p_in, "SBM intra-class edge probability",
            [this](auto& c) { c.sbm.p_in = cli.sbm.p_in; });
        add(app, "--sbm-p-out", cli.sbm.p_out, "SBM inter-class edge probability",
            [this](auto& c) { c.sbm.p_out = cli.sbm.p_out; });
        add(app, "--sbm-feat-dim", cli.sbm.feat_dim, "SBM feature width",
            [this](auto& c) { c.sbm.feat_dim = cli.sbm.feat_dim; });
        add(app, "--sbm-noise", cli.sbm.noise, "SBM feature noise", [this](auto& c) { c.sbm.noise = cli.sbm.noise; });
    }

    rsc::ExperimentConfig resolve() const {
        rsc::ExperimentConfig config;
        if (!config_path.empty()) rsc::apply_config_file(config, config_path);
        for (const auto& [option, copy] : overrides)
            if (option->count() > 0) copy(config);
        return config;
    }
};

// Writes to --out when given, stdout otherwise.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw rsc::IoError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Budgeted top-k approximation of backward SpMM for GNN training"};
    app.require_subcommand(1);

    ExperimentFlags train_flags;
    std::string train_out;
    auto* train_cmd = app.add_subcommand("train", "train a GCN/GraphSAGE model and emit per-epoch metrics CSV");
    train_flags.attach(*train_cmd);
    train_cmd->add_option("--out", train_out, "metrics CSV path (stdout if omitted)");

    ExperimentFlags stab_flags;
    std::string stab_out;
    auto* stab_cmd = app.add_subcommand("stability", "AUC of top-k sets between steps t and t+10 (caching disabled)");
    stab_flags.attach(*stab_cmd);
    stab_cmd->add_option("--out", stab_out, "CSV path (stdout if omitted)");

    rsc::BenchParams bench;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("bench-spmm", "time exact vs top-k SpMM on a random CSR");
    bench_cmd->add_option("--n", bench.n, "matrix size");
    bench_cmd->add_option("--density", bench.density, "nonzero density");
    bench_cmd->add_option("--d", bench.d, "dense operand width");
    bench_cmd->add_option("--k-fractions", bench.k_fractions, "k / n values")->delimiter(',');
    bench_cmd->add_option("--trials", bench.trials, "timed repetitions (median reported)");
    bench_cmd->add_option("--seed", bench.seed, "seed");
    bench_cmd->add_option("--out", bench_out, "CSV path (stdout if omitted)");

    std::string profile_path;
    double alloc_budget = 0.1;
    double alloc_alpha = 0.02;
    std::string alloc_out;
    auto* alloc_cmd = app.add_subcommand("allocate", "run the greedy allocation on a recorded profile CSV");
    alloc_cmd->add_option("--profile", profile_path, "CSV with layer,pair_index,product,nnz,d")->required();
    alloc_cmd->add_option("--budget-c,--budget", alloc_budget, "FLOP budget C in (0, 1)");
    alloc_cmd->add_option("--alpha", alloc_alpha, "step size as a fraction of |V|");
    alloc_cmd->add_option("--out", alloc_out, "CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (*train_cmd) {
            const rsc::ExperimentConfig config = train_flags.resolve();
            Output out(train_out);
            rsc::cmd_train(config, out.stream(), train_out.empty() ? std::cerr : std::cout);
        } else if (*stab_cmd) {
            const rsc::ExperimentConfig config = stab_flags.resolve();
            Output out(stab_out);
            rsc::cmd_stability(config, out.stream());
        } else if (*bench_cmd) {
            Output out(bench_out);
            rsc::cmd_bench_spmm(bench, out.stream());
        } else if (*alloc_cmd) {
            std::ifstream in(profile_path);
            if (!in) throw rsc::ConfigError("cannot open profile '" + profile_path + "'");
            Output out(alloc_out);
            rsc::cmd_allocate(in, alloc_budget, alloc_alpha, out.stream());
        }
    } catch (const rsc::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const rsc::ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const rsc::IoError& e) {
        // Unreadable or malformed input files are the caller's to fix.
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
