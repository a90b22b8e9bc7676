#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "dpar/graph.hpp"
#include "dpar/model.hpp"

namespace dpar {

struct EvalConfig {
    int power_iters = 2;  // P
    double alpha = 0.25;
};

// Encoder outputs for all nodes, one row per node (n x c).
Eigen::MatrixXd encode_all(const MlpParams& params, const Graph& g);

// Test-time propagation: Q0 = H, Qp = (1-alpha) D^-1 A Q(p-1) + alpha H,
// followed by a row-wise softmax. Degree-0 rows of D^-1 A are zero.
Eigen::MatrixXd power_iteration_predict(const MlpParams& params, const Graph& test_graph,
                                        const EvalConfig& cfg);

// Fraction of rows whose argmax matches the label; argmax ties break toward
// the lowest class index. Throws on empty input.
double accuracy(const Eigen::MatrixXd& predictions, const std::vector<int>& labels);

// CSV of encoder outputs plus a label column; header h0..h{c-1},label.
void export_embeddings(const MlpParams& params, const Graph& g, const std::string& path);

}  // namespace dpar
