#include "dpar/eval.hpp"

#include <cstdio>
#include <fstream>

#include "dpar/errors.hpp"

namespace dpar {

Eigen::MatrixXd encode_all(const MlpParams& params, const Graph& g) {
    if (g.d != params.input_dim()) {
        throw DimensionError("graph feature dimension does not match the model");
    }
    Eigen::MatrixXd h(g.n_nodes, params.n_classes());
    for (int i = 0; i < g.n_nodes; ++i) {
        h.row(i) = forward_encode(params, g.features.row(i).transpose()).transpose();
    }
    return h;
}

Eigen::MatrixXd power_iteration_predict(const MlpParams& params, const Graph& test_graph,
                                        const EvalConfig& cfg) {
    if (cfg.power_iters < 0) throw ConfigError("power_iters must be >= 0");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");

    const Eigen::MatrixXd h = encode_all(params, test_graph);
    Eigen::MatrixXd q = h;
    Eigen::MatrixXd next(q.rows(), q.cols());
    for (int p = 0; p < cfg.power_iters; ++p) {
        for (int i = 0; i < test_graph.n_nodes; ++i) {
            if (test_graph.degree(i) == 0) {
                next.row(i) = cfg.alpha * h.row(i);
                continue;
            }
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(q.cols());
            for (int j : test_graph.neighbors(i)) acc += q.row(j);
            next.row(i) = (1.0 - cfg.alpha) / test_graph.degree(i) * acc +
                          cfg.alpha * h.row(i);
        }
        q.swap(next);
    }
    // Row-wise softmax.
    for (int i = 0; i < q.rows(); ++i) {
        const double m = q.row(i).maxCoeff();
        Eigen::ArrayXd z = (q.row(i).array() - m).exp();
        q.row(i) = (z / z.sum()).transpose();
    }
    return q;
}

double accuracy(const Eigen::MatrixXd& predictions, const std::vector<int>& labels) {
    if (predictions.rows() == 0) throw DimensionError("accuracy over empty input");
    if (predictions.rows() != static_cast<long>(labels.size())) {
        throw DimensionError("predictions and labels differ in length");
    }
    long correct = 0;
    for (long i = 0; i < predictions.rows(); ++i) {
        int arg = 0;
        for (int j = 1; j < predictions.cols(); ++j) {
            if (predictions(i, j) > predictions(i, arg)) arg = j;  // ties keep lowest
        }
        if (arg == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.rows());
}

void export_embeddings(const MlpParams& params, const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot open '" + path + "' for writing");
    const Eigen::MatrixXd h = encode_all(params, g);
    for (int j = 0; j < h.cols(); ++j) out << 'h' << j << ',';
    out << "label\n";
    char buf[40];
    for (int i = 0; i < h.rows(); ++i) {
        for (int j = 0; j < h.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", h(i, j));
            out << buf << ',';
        }
        out << g.labels[i] << '\n';
    }
}

}  // namespace dpar
