#include "dpar/appr.hpp"

#include <algorithm>
#include <cmath>

#include "dpar/errors.hpp"

namespace dpar {

double ApprVector::l1_norm() const {
    double s = 0.0;
    for (const auto& [idx, w] : entries) s += std::abs(w);
    return s;
}

double ApprVector::value_at(int index) const {
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), index,
        [](const std::pair<int, double>& e, int i) { return e.first < i; });
    return (it != entries.end() && it->first == index) ? it->second : 0.0;
}

ApprVector solve_appr_ista(const Graph& g, int source, const ApprParams& params) {
    if (source < 0 || source >= g.n_nodes) throw DimensionError("source node out of range");
    if (!(params.alpha > 0.0 && params.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (params.rho <= 0.0 || params.gamma <= 0.0 || params.max_iters <= 0) {
        throw ConfigError("rho, gamma, max_iters must be positive");
    }

    ApprVector result;
    result.source = source;
    if (g.degree(source) == 0) {
        result.entries = {{source, 1.0}};
        result.teleport_only = true;
        return result;
    }

    const int n = g.n_nodes;
    const double alpha = params.alpha;
    std::vector<double> sqrt_deg(n, 0.0), inv_sqrt_deg(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (g.degree(i) > 0) {
            sqrt_deg[i] = std::sqrt(static_cast<double>(g.degree(i)));
            inv_sqrt_deg[i] = 1.0 / sqrt_deg[i];
        }
    }

    // Quadratic Q = ((1+alpha)/2) I - ((1-alpha)/2) D^-1/2 A D^-1/2 has its
    // spectrum inside [alpha, 1], so eta = 1/(1+alpha) is a valid fixed step.
    const double diag = 0.5 * (1.0 + alpha);
    const double off = 0.5 * (1.0 - alpha);
    const double grad_source = alpha * inv_sqrt_deg[source];
    double eta = 1.0 / (1.0 + alpha);

    std::vector<double> q(n, 0.0), q_next(n, 0.0);
    double prev_change = 0.0;
    bool have_prev_change = false;
    int halvings = 0;

    for (int iter = 0; iter < params.max_iters; ++iter) {
        double change = 0.0;
        double norm_q = 0.0;
        for (int i = 0; i < n; ++i) {
            double neighbor_sum = 0.0;
            for (int j : g.neighbors(i)) neighbor_sum += q[j] * inv_sqrt_deg[j];
            double grad = diag * q[i] - off * inv_sqrt_deg[i] * neighbor_sum;
            if (i == source) grad -= grad_source;
            const double next = std::max(0.0, q[i] - eta * grad - eta * params.rho * alpha * sqrt_deg[i]);
            q_next[i] = next;
            change += std::abs(next - q[i]);
            norm_q += q[i];
        }
        if (!std::isfinite(change) || (have_prev_change && change > 4.0 * prev_change && change > 1e-12)) {
            // Divergence backoff: halve the step and retry from the current iterate.
            if (++halvings > 60) {
                result.converged = false;
                break;
            }
            eta *= 0.5;
            have_prev_change = false;
            continue;
        }
        q.swap(q_next);
        if (change <= params.gamma * norm_q) {
            result.converged = true;
            prev_change = change;
            have_prev_change = true;
            break;
        }
        if (iter + 1 == params.max_iters) result.converged = false;
        prev_change = change;
        have_prev_change = true;
    }

    for (int i = 0; i < n; ++i) {
        const double p = sqrt_deg[i] * q[i];
        if (p > 0.0) result.entries.emplace_back(i, p);
    }
    return result;
}

ApprVector solve_ppr_dense(const Graph& g, int source, double alpha) {
    if (source < 0 || source >= g.n_nodes) throw DimensionError("source node out of range");
    if (g.n_nodes > kDenseSolveNodeLimit) {
        throw ConfigError("dense PPR solve limited to " + std::to_string(kDenseSolveNodeLimit) +
                          " nodes");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");

    const int n = g.n_nodes;
    Eigen::MatrixXd walk = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        if (g.degree(j) == 0) {
            walk(j, j) = 1.0;  // isolated walker stays put
            continue;
        }
        walk(j, j) = 0.5;
        const double step = 0.5 / static_cast<double>(g.degree(j));
        for (int i : g.neighbors(j)) walk(i, j) += step;
    }
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - (1.0 - alpha) * walk;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[source] = alpha;
    const Eigen::VectorXd pi = system.partialPivLu().solve(rhs);

    ApprVector result;
    result.source = source;
    for (int i = 0; i < n; ++i) {
        if (pi[i] != 0.0) result.entries.emplace_back(i, pi[i]);
    }
    return result;
}

}  // namespace dpar
