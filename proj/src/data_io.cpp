#include "rsc/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "rsc/errors.hpp"
#include "rsc/rng.hpp"

namespace rsc {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

std::string where(const std::string& source, Index line) { return source + ":" + std::to_string(line) + ": "; }

double parse_real(const std::string& cell, const std::string& context) {
    const std::string t = trim(cell);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value))
        throw IoError(context + "non-numeric cell '" + t + "'");
    return value;
}

long long parse_integer(const std::string& token, const std::string& context) {
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
        throw IoError(context + "expected an integer, got '" + token + "'");
    return value;
}

void check_rows(Index got, std::optional<Index> expected, const std::filesystem::path& path) {
    if (expected && got != *expected)
        throw ConfigError("'" + path.string() + "' has " + std::to_string(got) + " rows, graph has " +
                          std::to_string(*expected) + " nodes");
}

}  // namespace

int GraphDataset::num_classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

void validate_dataset(const GraphDataset& data) {
    const Index n = data.nodes();
    if (n == 0) throw ConfigError("dataset: graph has no nodes");
    if (data.adjacency.cols() != n) throw ConfigError("dataset: adjacency must be square");
    if (data.features.rows() != n) throw ConfigError("dataset: feature rows != node count");
    if (data.labels.size() != n) throw ConfigError("dataset: label count != node count");
    if (data.train_mask.size() != n || data.val_mask.size() != n || data.test_mask.size() != n)
        throw ConfigError("dataset: mask length != node count");
    Index train = 0, val = 0, test = 0;
    for (Index i = 0; i < n; ++i) {
        if (data.labels[i] < 0) throw ConfigError("dataset: negative label");
        const int owners = int(data.train_mask[i]) + int(data.val_mask[i]) + int(data.test_mask[i]);
        if (owners > 1) throw ConfigError("dataset: masks overlap at node " + std::to_string(i));
        train += data.train_mask[i];
        val += data.val_mask[i];
        test += data.test_mask[i];
    }
    if (train == 0 || val == 0 || test == 0) throw ConfigError("dataset: train, val and test masks must be non-empty");
    std::vector<bool> seen(static_cast<Index>(data.num_classes()), false);
    for (Index i = 0; i < n; ++i)
        if (data.train_mask[i]) seen[static_cast<Index>(data.labels[i])] = true;
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ConfigError("dataset: some class has no training node");
}

CsrMatrix parse_edge_list(std::istream& in, const std::string& source) {
    std::vector<std::pair<Index, Index>> edges;
    std::optional<Index> declared;
    Index max_index = 0;
    bool any = false;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string body = line;
        if (const auto hash = body.find('#'); hash != std::string::npos) {
            std::istringstream comment(body.substr(hash + 1));
            std::string key;
            long long count = -1;
            if (comment >> key && key == "nodes" && comment >> count) {
                if (count < 0) throw IoError(where(source, line_no) + "negative node count");
                declared = static_cast<Index>(count);
            }
            body.resize(hash);
        }
        std::istringstream fields(body);
        std::string a, b, extra;
        if (!(fields >> a)) continue;
        if (!(fields >> b) || (fields >> extra)) throw IoError(where(source, line_no) + "expected 'src dst'");
        const long long src = parse_integer(a, where(source, line_no));
        const long long dst = parse_integer(b, where(source, line_no));
        if (src < 0 || dst < 0) throw IoError(where(source, line_no) + "negative node index");
        edges.emplace_back(static_cast<Index>(src), static_cast<Index>(dst));
        max_index = std::max({max_index, static_cast<Index>(src), static_cast<Index>(dst)});
        any = true;
    }
    const Index n = declared ? *declared : (any ? max_index + 1 : 0);
    if (any && max_index >= n) throw IoError(source + ": node index exceeds declared node count");

    std::set<std::pair<Index, Index>> unique;
    for (auto [u, v] : edges) {
        if (u == v) continue;
        unique.emplace(u, v);
        unique.emplace(v, u);
    }
    std::vector<CooEntry> entries;
    entries.reserve(unique.size());
    for (auto [u, v] : unique) entries.push_back({u, v, 1.0});
    return CsrMatrix::from_coo(n, n, entries);
}

CsrMatrix load_edge_list(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_edge_list(in, path.string());
}

void write_edge_list(const CsrMatrix& adjacency, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "# nodes " << adjacency.rows() << "\n";
    for (Index i = 0; i < adjacency.rows(); ++i)
        for (Index t = adjacency.row_begin(i); t < adjacency.row_end(i); ++t)
            if (i < adjacency.col()[t]) out << i << ' ' << adjacency.col()[t] << '\n';
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

DenseMatrix load_features_csv(const std::filesystem::path& path, std::optional<Index> expected_rows) {
    auto in = open_input(path);
    std::vector<double> data;
    Index rows = 0;
    Index cols = 0;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::istringstream cells(line);
        std::string cell;
        Index count = 0;
        while (std::getline(cells, cell, ',')) {
            data.push_back(parse_real(cell, where(path.string(), line_no)));
            ++count;
        }
        if (rows == 0) cols = count;
        if (count != cols) throw IoError(where(path.string(), line_no) + "ragged feature row");
        ++rows;
    }
    check_rows(rows, expected_rows, path);
    return DenseMatrix(rows, cols, std::move(data));
}

std::vector<int> load_labels(const std::filesystem::path& path, std::optional<Index> expected_rows) {
    auto in = open_input(path);
    std::vector<int> labels;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const long long v = parse_integer(t, where(path.string(), line_no));
        if (v < 0 || v > std::numeric_limits<int>::max())
            throw IoError(where(path.string(), line_no) + "label out of range");
        labels.push_back(static_cast<int>(v));
    }
    check_rows(labels.size(), expected_rows, path);
    return labels;
}

MaskSet load_masks(const std::filesystem::path& path, std::optional<Index> expected_rows) {
    auto in = open_input(path);
    MaskSet masks;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t != "train" && t != "val" && t != "test" && t != "none")
            throw IoError(where(path.string(), line_no) + "mask must be train, val, test or none");
        masks.train.push_back(t == "train");
        masks.val.push_back(t == "val");
        masks.test.push_back(t == "test");
    }
    check_rows(masks.train.size(), expected_rows, path);
    return masks;
}

GraphDataset load_dataset(const DatasetPaths& paths) {
    GraphDataset data;
    data.adjacency = load_edge_list(paths.edges);
    const Index n = data.adjacency.rows();
    data.features = load_features_csv(paths.features, n);
    data.labels = load_labels(paths.labels, n);
    MaskSet masks = load_masks(paths.masks, n);
    data.train_mask = std::move(masks.train);
    data.val_mask = std::move(masks.val);
    data.test_mask = std::move(masks.test);
    validate_dataset(data);
    return data;
}

GraphDataset generate_sbm(const SbmParams& params) {
    if (params.nodes < 2 || params.classes < 2 || params.nodes < static_cast<Index>(params.classes) * 5)
        throw ConfigError("generate_sbm: need >= 2 classes and >= 5 nodes per class");
    if (!(params.p_out >= 0.0 && params.p_out < params.p_in && params.p_in <= 1.0))
        throw ConfigError("generate_sbm: require 0 <= p_out < p_in <= 1");
    if (params.feat_dim < static_cast<Index>(params.classes))
        throw ConfigError("generate_sbm: feat_dim must be at least the class count");
    if (params.noise < 0.0) throw ConfigError("generate_sbm: noise must be non-negative");

    const Rng root(params.seed);
    Rng label_rng = root.split("labels");
    Rng graph_rng = root.split("graph");
    Rng feature_rng = root.split("features");
    Rng mask_rng = root.split("masks");

    const Index n = params.nodes;
    const auto classes = static_cast<Index>(params.classes);

    GraphDataset data;
    data.labels.resize(n);
    for (Index i = 0; i < n; ++i) data.labels[i] = static_cast<int>(i % classes);
    shuffle(data.labels, label_rng);

    std::vector<CooEntry> entries;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double p = data.labels[i] == data.labels[j] ? params.p_in : params.p_out;
            if (graph_rng.bernoulli(p)) {
                entries.push_back({i, j, 1.0});
                entries.push_back({j, i, 1.0});
            }
        }
    }
    data.adjacency = CsrMatrix::from_coo(n, n, entries);

    data.features = DenseMatrix(n, params.feat_dim);
    for (Index i = 0; i < n; ++i) {
        auto row = data.features.row(i);
        for (Index c = 0; c < params.feat_dim; ++c) row[c] = params.noise * feature_rng.normal();
        row[static_cast<Index>(data.labels[i])] += 1.0;
    }

    data.train_mask.assign(n, false);
    data.val_mask.assign(n, false);
    data.test_mask.assign(n, false);
    for (Index c = 0; c < classes; ++c) {
        std::vector<Index> members;
        for (Index i = 0; i < n; ++i)
            if (static_cast<Index>(data.labels[i]) == c) members.push_back(i);
        shuffle(members, mask_rng);
        const Index n_train = members.size() * 6 / 10;
        const Index n_val = members.size() * 2 / 10;
        for (Index r = 0; r < members.size(); ++r) {
            if (r < n_train) data.train_mask[members[r]] = true;
            else if (r < n_train + n_val) data.val_mask[members[r]] = true;
            else data.test_mask[members[r]] = true;
        }
    }
    validate_dataset(data);
    return data;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void write_metrics_csv(const std::vector<EpochRecord>& history, std::ostream& out) {
    out << kMetricsHeader << '\n';
    for (const auto& r : history) {
        out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.train_acc) << ','
            << format_double(r.val_acc) << ',' << format_double(r.test_acc) << ',' << r.bwd_spmm_flops << ','
            << r.bwd_spmm_flops_exact_equiv << ',' << format_double(r.alloc_ms) << ','
            << format_double(r.elapsed_ms) << ',' << (r.approx_active ? 1 : 0) << ','
            << format_double(r.mean_auc_stability) << '\n';
    }
}

void write_metrics_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_metrics_csv(history, out);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<EpochRecord> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kMetricsHeader) throw IoError("metrics CSV: unexpected header");
    std::vector<EpochRecord> rows;
    Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (cells.size() != 11) throw IoError(where("metrics", line_no) + "expected 11 columns");
        const std::string ctx = where("metrics", line_no);
        auto real = [&](const std::string& c) {
            return c == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_real(c, ctx);
        };
        EpochRecord r;
        r.epoch = static_cast<int>(parse_integer(cells[0], ctx));
        r.loss = real(cells[1]);
        r.train_acc = real(cells[2]);
        r.val_acc = real(cells[3]);
        r.test_acc = real(cells[4]);
        r.bwd_spmm_flops = static_cast<std::uint64_t>(parse_integer(cells[5], ctx));
        r.bwd_spmm_flops_exact_equiv = static_cast<std::uint64_t>(parse_integer(cells[6], ctx));
        r.alloc_ms = real(cells[7]);
        r.elapsed_ms = real(cells[8]);
        r.approx_active = parse_integer(cells[9], ctx) != 0;
        r.mean_auc_stability = real(cells[10]);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace rsc
