#pragma once

#include <string>

#include "dpar/config.hpp"
#include "dpar/dp_appr.hpp"
#include "dpar/graph.hpp"
#include "dpar/trainer.hpp"

namespace dpar {

// Mechanism parameters derived from a matrix-stage budget target: the
// per-row cost is decomposed out of the target, and for the exponential
// mechanism further inverted to the per-entry budget. For em1 the row cost
// splits evenly between index selection and value noising unless cfg.eps2
// pins the value share.
struct ApprStageSetup {
    PrivacyBudget target;     // (eps_pr, delta_pr) handed to the stage
    double row_cost = 0.0;    // per-row budget after decomposition
    double row_delta = 0.0;   // per-row delta (delta_pr / 2M)
    double em_eps = 0.0;      // per-entry selection budget (em mechanisms)
    double em_eps2 = 0.0;     // value budget (em1)
    double gm_eps = 0.0;      // per-row budget (gm)
    double gm_sigma = 0.0;
};

ApprStageSetup derive_appr_stage(const RunConfig& cfg, PrivacyBudget pr_target, int m);

// Runs the configured mechanism against the split's train graph. The
// returned matrix carries the spent (eps_pr, delta_pr).
ApprMatrix build_appr_matrix(const Graph& train_graph, const std::vector<int>& v_m,
                             const RunConfig& cfg, const ApprStageSetup& setup);

struct PipelineResult {
    RunConfig cfg;
    PrivacyBudget pr;     // spent by the matrix stage
    PrivacyBudget sgd;    // spent by training
    PrivacyBudget total;  // subsampled sequential composition of the two
    double test_accuracy = 0.0;
    double sigma = 0.0;
    long steps = 0;
    double q_batch = 0.0;
    bool sigma_exceeds_tau = false;
    int n_nodes = 0;
    int train_nodes = 0;
    int test_nodes = 0;
};

// Full run: split, matrix stage, DP-SGD training (sigma calibrated from the
// stage target unless cfg fixes it), power-iteration evaluation, budget
// report. mechanism "none" runs the non-private path: true top-k rows, no
// clipping, no noise, infinite reported epsilon.
PipelineResult run_pipeline(const Graph& g, const RunConfig& cfg);

// Deterministic key=value rendering with a fixed key set; equal results
// produce byte-identical text.
std::string format_metrics(const PipelineResult& r);

}  // namespace dpar
