#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dpar {

// Undirected graph in CSR form with dense per-node features and labels.
// Both edge directions are stored; construction removes self loops and
// duplicate edges and symmetrizes. Immutable after construction.
struct Graph {
    int n_nodes = 0;
    std::vector<int> row_ptr;  // size n_nodes + 1
    std::vector<int> col_idx;  // size 2 * n_edges, sorted within each row
    Eigen::MatrixXd features;  // n_nodes x d
    std::vector<int> labels;   // size n_nodes, values in [0, c)
    int d = 0;
    int c = 0;

    int degree(int v) const { return row_ptr[v + 1] - row_ptr[v]; }
    std::span<const int> neighbors(int v) const {
        return {col_idx.data() + row_ptr[v], static_cast<std::size_t>(degree(v))};
    }
    long n_edges() const { return static_cast<long>(col_idx.size()) / 2; }
};

// Validates and assembles a Graph from raw parts. Edges may be given in any
// order/direction; self loops are dropped and duplicates collapsed.
Graph build_graph(int n_nodes, std::vector<std::pair<int, int>> edges,
                  Eigen::MatrixXd features, std::vector<int> labels);

// Edge file: "<u>\t<v>" per line, '#' lines ignored. Feature file: CSV, one
// row per node in id order. Label file: one integer per line.
Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path);
void save_graph(const Graph& g, const std::string& edge_path,
                const std::string& feature_path, const std::string& label_path);

struct SplitSpec {
    double train_fraction = 0.8;
    double sample_rate = 0.09;  // per-node retention probability q'
    int appr_node_count = 70;   // M
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    Graph train_graph;  // sampled training subgraph, internal edges only
    Graph test_graph;
    std::vector<int> v_m;            // indices into train_graph, M entries
    std::vector<int> train_orig_ids; // train_graph index -> original node id
    std::vector<int> test_orig_ids;
    SplitSpec spec;
};

// Partitions nodes train/test, drops every cross-partition edge, keeps each
// train node independently with probability q', then samples M distinct
// nodes from the surviving train graph. Deterministic given spec.seed.
DatasetSplit inductive_split(const Graph& g, const SplitSpec& spec);

// Stochastic block model with community-centroid features. Node i belongs
// to community i % n_communities; its feature row is the community's basis
// vector in feature_dim plus N(0, feature_noise^2) noise; label = community.
Graph generate_sbm(int n_nodes, int n_communities, double p_in, double p_out,
                   int feature_dim, double feature_noise, std::uint64_t seed);

// Split manifests record node ids and the seed so a split replays bit-exactly
// against the original graph.
void save_split(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split(const Graph& original, const std::string& path);

// Subgraph induced by `ids` (original node ids, ascending); node k of the
// result is ids[k].
Graph induced_subgraph(const Graph& g, const std::vector<int>& ids);

}  // namespace dpar
