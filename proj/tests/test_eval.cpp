#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dpar/errors.hpp"
#include "dpar/eval.hpp"
#include "dpar/graph.hpp"
#include "dpar/rng.hpp"

using namespace dpar;

namespace {

Graph graph_of(int n, std::vector<std::pair<int, int>> edges, Eigen::MatrixXd feats,
               std::vector<int> labels) {
    return build_graph(n, std::move(edges), std::move(feats), std::move(labels));
}

// Encoder that passes features straight through: d == c, relu-safe inputs.
MlpParams passthrough_params(int c) {
    MlpParams p;
    p.w1 = Eigen::MatrixXd::Identity(c, c);
    p.b1 = Eigen::VectorXd::Zero(c);
    p.w2 = Eigen::MatrixXd::Identity(c, c);
    p.b2 = Eigen::VectorXd::Zero(c);
    return p;
}

}  // namespace

TEST_CASE("P=0 reduces to the row-wise softmax of the encoder output") {
    Eigen::MatrixXd feats(2, 2);
    feats << 2.0, 0.0, 0.0, 1.0;
    const Graph g = graph_of(2, {{0, 1}}, feats, {0, 1});
    const MlpParams p = passthrough_params(2);
    const Eigen::MatrixXd probs = power_iteration_predict(p, g, {0, 0.25});
    CHECK(probs(0, 0) == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)).epsilon(1e-12));
    CHECK(probs(1, 1) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-12));
}

TEST_CASE("two-node path with identity encodings mixes to (0.25, 0.75)") {
    Eigen::MatrixXd feats(2, 2);
    feats << 1.0, 0.0, 0.0, 1.0;
    const Graph g = graph_of(2, {{0, 1}}, feats, {0, 1});
    const MlpParams p = passthrough_params(2);
    // One propagation step: Q1 = 0.75 * D^-1 A H + 0.25 * H.
    const Eigen::MatrixXd probs = power_iteration_predict(p, g, {1, 0.25});
    const double z0 = std::exp(0.25), z1 = std::exp(0.75);
    CHECK(probs(0, 0) == doctest::Approx(z0 / (z0 + z1)).epsilon(1e-12));
    CHECK(probs(0, 1) == doctest::Approx(z1 / (z0 + z1)).epsilon(1e-12));
    CHECK(probs(1, 0) == doctest::Approx(z1 / (z0 + z1)).epsilon(1e-12));
}

TEST_CASE("edgeless graphs keep each node's own argmax") {
    Eigen::MatrixXd feats(3, 3);
    feats << 3.0, 1.0, 0.0,
             0.0, 2.0, 1.0,
             1.0, 0.0, 4.0;
    const Graph g = graph_of(3, {}, feats, {0, 1, 2});
    const MlpParams p = passthrough_params(3);
    const Eigen::MatrixXd probs = power_iteration_predict(p, g, {2, 0.25});
    CHECK(accuracy(probs, {0, 1, 2}) == 1.0);
    // Q^P collapses to alpha * H on isolated nodes; check one row exactly.
    Eigen::VectorXd expected = (0.25 * feats.row(0)).transpose();
    expected = (expected.array() - expected.maxCoeff()).exp();
    expected /= expected.sum();
    CHECK((probs.row(0).transpose() - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("propagation rows stay stochastic") {
    const Graph g = generate_sbm(40, 2, 0.3, 0.05, 6, 0.4, 3);
    Rng init_rng(7, "init");
    const MlpParams p = init_mlp(6, 8, 2, init_rng);
    const Eigen::MatrixXd probs = power_iteration_predict(p, g, {2, 0.25});
    for (int i = 0; i < probs.rows(); ++i) {
        CHECK(std::abs(probs.row(i).sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("row-normalized adjacency rows sum to one when degrees are positive") {
    const Graph g = generate_sbm(30, 2, 0.5, 0.2, 4, 0.1, 9);
    for (int i = 0; i < g.n_nodes; ++i) {
        if (g.degree(i) == 0) continue;
        double row_sum = 0.0;
        for (int j : g.neighbors(i)) {
            (void)j;
            row_sum += 1.0 / g.degree(i);
        }
        CHECK(std::abs(row_sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("accuracy counts argmax matches with lowest-index tie break") {
    Eigen::MatrixXd probs(4, 3);
    probs << 0.6, 0.3, 0.1,   // -> 0
             0.2, 0.5, 0.3,   // -> 1
             0.4, 0.4, 0.2,   // tie -> 0
             0.1, 0.2, 0.7;   // -> 2
    CHECK(accuracy(probs, {0, 1, 0, 2}) == 1.0);
    CHECK(accuracy(probs, {1, 0, 1, 0}) == 0.0);
    CHECK(accuracy(probs, {0, 1, 1, 0}) == doctest::Approx(0.5));
    CHECK(accuracy(probs, {0, 1, 1, 2}) == doctest::Approx(0.75));
}

TEST_CASE("accuracy over empty input is an error") {
    Eigen::MatrixXd empty(0, 3);
    CHECK_THROWS_AS(accuracy(empty, {}), DimensionError);
    Eigen::MatrixXd one(1, 2);
    one << 0.5, 0.5;
    CHECK_THROWS_AS(accuracy(one, {0, 1}), DimensionError);
}

TEST_CASE("embedding export has the pinned header and round-trips") {
    Eigen::MatrixXd feats(2, 2);
    feats << 0.5, -1.0, 2.0, 0.25;
    const Graph g = graph_of(2, {{0, 1}}, feats, {1, 0});
    const MlpParams p = passthrough_params(2);
    const auto path = (std::filesystem::temp_directory_path() / "emb.csv").string();
    export_embeddings(p, g, path);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "h0,h1,label");
    const Eigen::MatrixXd h = encode_all(p, g);
    for (int i = 0; i < 2; ++i) {
        std::string line;
        REQUIRE(std::getline(in, line));
        std::stringstream ss(line);
        std::string cell;
        for (int j = 0; j < 2; ++j) {
            std::getline(ss, cell, ',');
            CHECK(std::abs(std::strtod(cell.c_str(), nullptr) - h(i, j)) <= 1e-12);
        }
        std::getline(ss, cell, ',');
        CHECK(std::stoi(cell) == g.labels[i]);
    }
}
