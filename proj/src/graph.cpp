#include "dpar/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpar/errors.hpp"
#include "dpar/rng.hpp"

namespace dpar {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

int parse_node_id(const std::string& tok, const std::string& path, long line_no) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || value < 0) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": expected nonnegative node id, got '" + tok + "'");
    }
    return value;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StageError("cannot open '" + path + "' for reading");
    return in;
}

void format_double(std::string& buf, double v) {
    char tmp[40];
    std::snprintf(tmp, sizeof(tmp), "%.17g", v);
    buf += tmp;
}

}  // namespace

Graph build_graph(int n_nodes, std::vector<std::pair<int, int>> edges,
                  Eigen::MatrixXd features, std::vector<int> labels) {
    if (n_nodes < 0) throw DimensionError("negative node count");
    if (features.rows() != n_nodes) {
        throw DimensionError("feature rows (" + std::to_string(features.rows()) +
                             ") != node count (" + std::to_string(n_nodes) + ")");
    }
    if (static_cast<int>(labels.size()) != n_nodes) {
        throw DimensionError("label rows (" + std::to_string(labels.size()) +
                             ") != node count (" + std::to_string(n_nodes) + ")");
    }
    for (auto& [u, v] : edges) {
        if (u < 0 || u >= n_nodes || v < 0 || v >= n_nodes) {
            throw DimensionError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                 ") references a node outside [0," + std::to_string(n_nodes) + ")");
        }
        if (u > v) std::swap(u, v);
    }
    // Canonical (min,max) keys: drop self loops, collapse duplicates.
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::erase_if(edges, [](const auto& e) { return e.first == e.second; });

    Graph g;
    g.n_nodes = n_nodes;
    g.features = std::move(features);
    g.labels = std::move(labels);
    g.d = static_cast<int>(g.features.cols());
    int max_label = -1;
    for (int y : g.labels) {
        if (y < 0) throw DimensionError("negative label");
        max_label = std::max(max_label, y);
    }
    g.c = max_label + 1;

    std::vector<int> deg(n_nodes, 0);
    for (const auto& [u, v] : edges) {
        ++deg[u];
        ++deg[v];
    }
    g.row_ptr.assign(n_nodes + 1, 0);
    for (int i = 0; i < n_nodes; ++i) g.row_ptr[i + 1] = g.row_ptr[i] + deg[i];
    g.col_idx.assign(g.row_ptr[n_nodes], 0);
    std::vector<int> cursor(g.row_ptr.begin(), g.row_ptr.end() - 1);
    for (const auto& [u, v] : edges) {
        g.col_idx[cursor[u]++] = v;
        g.col_idx[cursor[v]++] = u;
    }
    for (int i = 0; i < n_nodes; ++i) {
        std::sort(g.col_idx.begin() + g.row_ptr[i], g.col_idx.begin() + g.row_ptr[i + 1]);
    }
    return g;
}

Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path) {
    // Features first: their row count defines the node count.
    std::vector<std::vector<double>> rows;
    {
        auto in = open_in(feature_path);
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            std::vector<double> row;
            std::stringstream ss(t);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                cell = trim(cell);
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end != cell.c_str() + cell.size() || cell.empty()) {
                    throw ParseError(feature_path + ":" + std::to_string(line_no) +
                                     ": bad feature value '" + cell + "'");
                }
                row.push_back(v);
            }
            if (!rows.empty() && row.size() != rows.front().size()) {
                throw ParseError(feature_path + ":" + std::to_string(line_no) +
                                 ": inconsistent column count");
            }
            rows.push_back(std::move(row));
        }
    }
    const int n = static_cast<int>(rows.size());
    const int d = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    Eigen::MatrixXd features(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) features(i, j) = rows[i][j];
    }

    std::vector<int> labels;
    {
        auto in = open_in(label_path);
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            labels.push_back(parse_node_id(t, label_path, line_no));
        }
    }
    if (static_cast<int>(labels.size()) != n) {
        throw DimensionError("label count (" + std::to_string(labels.size()) +
                             ") != feature row count (" + std::to_string(n) + ")");
    }

    std::vector<std::pair<int, int>> edges;
    {
        auto in = open_in(edge_path);
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const auto tab = t.find('\t');
            if (tab == std::string::npos) {
                throw ParseError(edge_path + ":" + std::to_string(line_no) +
                                 ": expected two tab-separated node ids");
            }
            const int u = parse_node_id(trim(t.substr(0, tab)), edge_path, line_no);
            const int v = parse_node_id(trim(t.substr(tab + 1)), edge_path, line_no);
            if (u >= n || v >= n) {
                throw DimensionError(edge_path + ":" + std::to_string(line_no) + ": node id " +
                                     std::to_string(std::max(u, v)) + " exceeds feature rows (" +
                                     std::to_string(n) + ")");
            }
            edges.emplace_back(u, v);
        }
    }
    return build_graph(n, std::move(edges), std::move(features), std::move(labels));
}

void save_graph(const Graph& g, const std::string& edge_path,
                const std::string& feature_path, const std::string& label_path) {
    {
        auto out = open_out(edge_path);
        for (int u = 0; u < g.n_nodes; ++u) {
            for (int v : g.neighbors(u)) {
                if (u < v) out << u << '\t' << v << '\n';
            }
        }
    }
    {
        auto out = open_out(feature_path);
        std::string line;
        for (int i = 0; i < g.n_nodes; ++i) {
            line.clear();
            for (int j = 0; j < g.d; ++j) {
                if (j) line += ',';
                format_double(line, g.features(i, j));
            }
            out << line << '\n';
        }
    }
    {
        auto out = open_out(label_path);
        for (int y : g.labels) out << y << '\n';
    }
}

Graph induced_subgraph(const Graph& g, const std::vector<int>& ids) {
    std::vector<int> to_sub(g.n_nodes, -1);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const int id = ids[k];
        if (id < 0 || id >= g.n_nodes) throw DimensionError("subgraph id out of range");
        to_sub[id] = static_cast<int>(k);
    }
    std::vector<std::pair<int, int>> edges;
    for (int u : ids) {
        for (int v : g.neighbors(u)) {
            if (u < v && to_sub[v] >= 0) edges.emplace_back(to_sub[u], to_sub[v]);
        }
    }
    const int n = static_cast<int>(ids.size());
    Eigen::MatrixXd features(n, g.d);
    std::vector<int> labels(n);
    for (int k = 0; k < n; ++k) {
        features.row(k) = g.features.row(ids[k]);
        labels[k] = g.labels[ids[k]];
    }
    Graph sub = build_graph(n, std::move(edges), std::move(features), std::move(labels));
    sub.c = g.c;  // keep the full class space even if some class is absent
    return sub;
}

DatasetSplit inductive_split(const Graph& g, const SplitSpec& spec) {
    if (spec.train_fraction <= 0.0 || spec.train_fraction > 1.0) {
        throw ConfigError("train_fraction must lie in (0,1]");
    }
    if (spec.sample_rate <= 0.0 || spec.sample_rate > 1.0) {
        throw ConfigError("sample_rate must lie in (0,1]");
    }
    if (spec.appr_node_count <= 0) throw ConfigError("appr_node_count must be positive");

    Rng rng(spec.seed, "split");
    std::vector<int> perm(g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i) perm[i] = i;
    for (int i = g.n_nodes - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    const int n_train = static_cast<int>(
        std::lround(spec.train_fraction * static_cast<double>(g.n_nodes)));

    std::vector<int> train_candidates(perm.begin(), perm.begin() + n_train);
    std::vector<int> test_ids(perm.begin() + n_train, perm.end());
    std::sort(train_candidates.begin(), train_candidates.end());
    std::sort(test_ids.begin(), test_ids.end());

    // Independent Bernoulli(q') retention per training node.
    std::vector<int> train_ids;
    for (int id : train_candidates) {
        if (spec.sample_rate >= 1.0 || rng.uniform01() < spec.sample_rate) {
            train_ids.push_back(id);
        }
    }
    if (static_cast<int>(train_ids.size()) < spec.appr_node_count) {
        throw ConfigError("only " + std::to_string(train_ids.size()) +
                          " train nodes survived sampling; need at least M=" +
                          std::to_string(spec.appr_node_count));
    }

    DatasetSplit split;
    split.spec = spec;
    split.train_orig_ids = train_ids;
    split.test_orig_ids = test_ids;
    split.train_graph = induced_subgraph(g, train_ids);
    split.test_graph = induced_subgraph(g, test_ids);

    // M distinct uniform picks from the train graph (partial Fisher-Yates).
    const int n_sub = split.train_graph.n_nodes;
    std::vector<int> pool(n_sub);
    for (int i = 0; i < n_sub; ++i) pool[i] = i;
    for (int i = 0; i < spec.appr_node_count; ++i) {
        const auto j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n_sub - i)));
        std::swap(pool[i], pool[j]);
    }
    split.v_m.assign(pool.begin(), pool.begin() + spec.appr_node_count);
    return split;
}

Graph generate_sbm(int n_nodes, int n_communities, double p_in, double p_out,
                   int feature_dim, double feature_noise, std::uint64_t seed) {
    if (n_communities <= 0 || n_communities > n_nodes) {
        throw ConfigError("need 0 < n_communities <= n_nodes");
    }
    if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0)) {
        throw ConfigError("need 0 <= p_out <= p_in <= 1");
    }
    if (feature_dim <= 0) throw ConfigError("feature_dim must be positive");
    if (feature_noise < 0.0) throw ConfigError("feature_noise must be nonnegative");

    std::vector<int> labels(n_nodes);
    for (int i = 0; i < n_nodes; ++i) labels[i] = i % n_communities;

    Rng edge_rng(seed, "sbm-edges");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_nodes; ++i) {
        for (int j = i + 1; j < n_nodes; ++j) {
            const double p = labels[i] == labels[j] ? p_in : p_out;
            if (p >= 1.0 || (p > 0.0 && edge_rng.uniform01() < p)) edges.emplace_back(i, j);
        }
    }

    Rng feat_rng(seed, "sbm-features");
    Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n_nodes, feature_dim);
    for (int i = 0; i < n_nodes; ++i) {
        features(i, labels[i] % feature_dim) = 1.0;
        if (feature_noise > 0.0) {
            for (int j = 0; j < feature_dim; ++j) {
                features(i, j) += feat_rng.gaussian(feature_noise);
            }
        }
    }
    return build_graph(n_nodes, std::move(edges), std::move(features), std::move(labels));
}

void save_split(const DatasetSplit& split, const std::string& path) {
    auto out = open_out(path);
    std::string buf;
    out << "dpar-split v1\n";
    out << "seed " << split.spec.seed << '\n';
    buf = "train_fraction ";
    format_double(buf, split.spec.train_fraction);
    out << buf << '\n';
    buf = "sample_rate ";
    format_double(buf, split.spec.sample_rate);
    out << buf << '\n';
    out << "m " << split.spec.appr_node_count << '\n';
    out << "train " << split.train_orig_ids.size() << '\n';
    for (int id : split.train_orig_ids) out << id << '\n';
    out << "test " << split.test_orig_ids.size() << '\n';
    for (int id : split.test_orig_ids) out << id << '\n';
    out << "vm " << split.v_m.size() << '\n';
    for (int idx : split.v_m) out << split.train_orig_ids[idx] << '\n';
}

DatasetSplit load_split(const Graph& original, const std::string& path) {
    auto in = open_in(path);
    std::string word;
    in >> word;
    std::string version;
    in >> version;
    if (word != "dpar-split" || version != "v1") {
        throw ParseError(path + ": not a dpar split manifest");
    }
    DatasetSplit split;
    auto expect_key = [&](const char* key) {
        in >> word;
        if (!in || word != key) throw ParseError(path + ": expected '" + key + "'");
    };
    expect_key("seed");
    in >> split.spec.seed;
    expect_key("train_fraction");
    in >> split.spec.train_fraction;
    expect_key("sample_rate");
    in >> split.spec.sample_rate;
    expect_key("m");
    in >> split.spec.appr_node_count;

    auto read_ids = [&](const char* key) {
        expect_key(key);
        std::size_t count = 0;
        in >> count;
        std::vector<int> ids(count);
        for (auto& id : ids) {
            in >> id;
            if (!in) throw ParseError(path + ": truncated id list '" + key + "'");
            if (id < 0 || id >= original.n_nodes) {
                throw DimensionError(path + ": id " + std::to_string(id) +
                                     " outside the original graph");
            }
        }
        return ids;
    };
    split.train_orig_ids = read_ids("train");
    split.test_orig_ids = read_ids("test");
    const std::vector<int> vm_orig = read_ids("vm");

    split.train_graph = induced_subgraph(original, split.train_orig_ids);
    split.test_graph = induced_subgraph(original, split.test_orig_ids);
    split.v_m.reserve(vm_orig.size());
    for (int id : vm_orig) {
        const auto it = std::lower_bound(split.train_orig_ids.begin(),
                                         split.train_orig_ids.end(), id);
        if (it == split.train_orig_ids.end() || *it != id) {
            throw DimensionError(path + ": vm id " + std::to_string(id) +
                                 " is not a train node");
        }
        split.v_m.push_back(static_cast<int>(it - split.train_orig_ids.begin()));
    }
    return split;
}

}  // namespace dpar
