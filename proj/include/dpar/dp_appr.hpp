#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dpar/accountant.hpp"
#include "dpar/appr.hpp"
#include "dpar/graph.hpp"
#include "dpar/rng.hpp"

namespace dpar {

// Replayable per-row noise streams: row i draws from (seed, stream + i).
struct NoiseRng {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    Rng row_rng(int row) const {
        return Rng(seed, stream + static_cast<std::uint64_t>(row));
    }
};

enum class EmOption {
    kUniformValues,  // selected entries set to 1/K
    kNoisyValues,    // selected entries keep clipped value + Laplace noise
};

struct EmConfig {
    double eps = 0.0;         // per-entry selection budget; Gumbel scale is clip/eps
    double eps_values = 0.0;  // extra budget for noisy values (kNoisyValues only)
    double delta = 0.0;
    double clip = 0.001;      // C2, entrywise bound
    int k = 2;
    EmOption option = EmOption::kUniformValues;
};

struct GmConfig {
    double eps = 0.0;
    double delta = 0.0;
    double clip = 0.01;  // C1, l2 bound
    int k = 2;

    double sigma() const { return accounting::gaussian_sigma(eps, delta, clip); }
};

inline PrivacyBudget em_matrix_budget(const EmConfig& cfg, int m) {
    const double eps_values =
        cfg.option == EmOption::kNoisyValues ? cfg.eps_values : 0.0;
    return accounting::em_matrix_budget(cfg.eps, eps_values, cfg.k, cfg.delta, m);
}

inline PrivacyBudget gm_matrix_budget(const GmConfig& cfg, int m) {
    return accounting::gm_matrix_budget(cfg.eps, cfg.delta, m);
}

// Top-K sparsified rows for the M sampled nodes, with the budget actually
// spent. Rows follow v_m order; columns index train-graph nodes.
struct ApprMatrix {
    int n_cols = 0;
    int k = 0;
    std::string mechanism;  // em0 | em1 | gm | features | none
    PrivacyBudget spent;
    std::uint64_t seed = 0;
    std::vector<ApprVector> rows;

    double max_column_l1() const;
};

// x -> x / max(1, |x|/bound) per entry; min(x, bound) for nonnegative input.
ApprVector clip_entrywise(ApprVector v, double bound);

// Whole-vector rescale to l2 norm <= bound.
ApprVector clip_l2(ApprVector v, double bound);

// Hook invoked with each clipped (pre-noise) row; used by tests to assert
// the clip bounds actually hold at the mechanism boundary.
using RowObserver = std::function<void(int row, const ApprVector& clipped)>;

// Indices of the k largest entries of utilities + iid Gumbel(beta) noise,
// returned in ascending index order. Ties break toward the lower index.
std::vector<int> gumbel_topk(std::span<const double> utilities, double beta, int k,
                             Rng& rng);

// Exponential-mechanism rows: per row, solve APPR, clip entrywise at C2, add
// Gumbel(C2/eps) noise to every coordinate (dense over all n_cols), keep the
// K largest. kUniformValues stores 1/K; kNoisyValues stores the clipped value
// plus Laplace(K C2/eps_values), floored at 0.
ApprMatrix dp_appr_em(const Graph& g, const std::vector<int>& v_m,
                      const ApprParams& params, const EmConfig& cfg,
                      const NoiseRng& noise, const RowObserver& observe = {});

// Gaussian-mechanism rows: per row, solve APPR, clip to l2 norm C1, add
// N(0, sigma^2) noise densely, keep the K largest noisy values floored at 0.
ApprMatrix dp_appr_gm(const Graph& g, const std::vector<int>& v_m,
                      const ApprParams& params, const GmConfig& cfg,
                      const NoiseRng& noise, const RowObserver& observe = {});

// Non-private true top-k rows (raw APPR values); spent budget is infinite.
ApprMatrix topk_appr(const Graph& g, const std::vector<int>& v_m,
                     const ApprParams& params, int k);

// Structure-free one-hot rows (each node aggregates only itself); zero cost.
ApprMatrix feature_identity_rows(const std::vector<int>& v_m, int n_cols);

// Header "M N K mechanism eps_pr delta_pr seed", then one row per line:
// source id followed by index:value pairs. Values round-trip bit-exactly.
void save_appr_matrix(const ApprMatrix& m, const std::string& path);
ApprMatrix load_appr_matrix(const std::string& path);

}  // namespace dpar
