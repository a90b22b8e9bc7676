#pragma once

#include <Eigen/Dense>

#include <string>

#include "dpar/appr.hpp"
#include "dpar/graph.hpp"
#include "dpar/rng.hpp"

namespace dpar {

// Two-layer MLP encoder: x -> W2^T relu(W1^T x + b1) + b2, emitting
// class-space outputs directly. All arithmetic is 64-bit.
struct MlpParams {
    Eigen::MatrixXd w1;  // d x h
    Eigen::VectorXd b1;  // h
    Eigen::MatrixXd w2;  // h x c
    Eigen::VectorXd b2;  // c

    int input_dim() const { return static_cast<int>(w1.rows()); }
    int hidden_dim() const { return static_cast<int>(w1.cols()); }
    int n_classes() const { return static_cast<int>(w2.cols()); }
    long n_params() const {
        return w1.size() + b1.size() + w2.size() + b2.size();
    }

    // Flat layout: w1 (column-major), b1, w2 (column-major), b2.
    Eigen::VectorXd flatten() const;
    static MlpParams unflatten(const Eigen::VectorXd& flat, int d, int h, int c);

    // params += a * flat (the SGD update path).
    void axpy(double a, const Eigen::VectorXd& flat);
};

MlpParams init_mlp(int d, int h, int c, Rng& rng);

Eigen::VectorXd forward_encode(const MlpParams& params, const Eigen::VectorXd& x);

// Pre-softmax weighted sum of neighbor representations over the row support.
// An empty support yields the zero vector (prediction falls back to uniform).
Eigen::VectorXd aggregate_representation(const MlpParams& params, const Graph& g,
                                         const ApprVector& appr_row);

// softmax(aggregate); strictly positive, sums to 1.
Eigen::VectorXd predict_node(const MlpParams& params, const Graph& g,
                             const ApprVector& appr_row);

struct PerNodeGradient {
    Eigen::VectorXd values;  // MlpParams flat layout
    int node = 0;
    double l2_norm = 0.0;
};

struct LossGrad {
    double loss = 0.0;
    PerNodeGradient grad;
};

// Cross-entropy loss of the row-aggregated prediction against `label`, with
// the exact gradient through every neighbor's forward pass. Stable via
// max-subtracted log-sum-exp.
LossGrad loss_and_grad(const MlpParams& params, const Graph& g, int node,
                       const ApprVector& appr_row, int label);

// Text checkpoint with a shape header; values round-trip exactly.
void save_mlp(const MlpParams& params, const std::string& path);
MlpParams load_mlp(const std::string& path);

}  // namespace dpar
