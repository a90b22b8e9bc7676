#pragma once

#include <utility>
#include <vector>

#include "dpar/graph.hpp"

namespace dpar {

struct ApprParams {
    double alpha = 0.25;   // teleportation constant
    double rho = 1e-4;     // l1 sparsity weight
    double gamma = 1e-4;   // relative l1-change stopping tolerance
    int max_iters = 10000;
};

// Sparse nonnegative personalized PageRank vector of one source node.
struct ApprVector {
    int source = 0;
    std::vector<std::pair<int, double>> entries;  // (index, weight), index ascending
    bool teleport_only = false;  // degree-0 source fallback was taken
    bool converged = true;       // false when the iteration cap was hit

    double l1_norm() const;
    double value_at(int index) const;  // 0 when absent
    std::size_t support_size() const { return entries.size(); }
};

// Proximal-gradient (ISTA) solve of the l1-regularized PageRank objective on
// the lazy walk W = (I + A D^-1)/2, mapped back to PageRank space. Uses the
// degree-normalized quadratic with nonnegative soft-thresholding and a fixed
// step 1/(1+alpha), halved on detected divergence. A degree-0 source returns
// the teleport-only one-hot vector, flagged.
ApprVector solve_appr_ista(const Graph& g, int source, const ApprParams& params);

// Exact dense solve of (I - (1-alpha) W) pi = alpha e_source. Isolated nodes
// keep the walker in place. Test oracle; guarded to small graphs.
ApprVector solve_ppr_dense(const Graph& g, int source, double alpha);

inline constexpr int kDenseSolveNodeLimit = 2000;

}  // namespace dpar
