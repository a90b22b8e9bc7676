#pragma once

#include <cstdint>
#include <vector>

#include "dpar/accountant.hpp"
#include "dpar/dp_appr.hpp"
#include "dpar/graph.hpp"
#include "dpar/model.hpp"

namespace dpar {

struct TrainConfig {
    double lr = 0.005;
    int batch = 60;
    int epochs = 200;
    double clip_grad = 1.0;  // C, per-node gradient l2 bound
    double tau = 1.0;        // column l1 clip bound applied to the matrix
    double sigma = 0.0;      // noise multiplier; 0 disables noising
    double delta_sgd = 0.0;  // accounting delta (required when sigma > 0)
    std::uint64_t seed = 0;
};

struct StepRecord {
    long step = 0;
    double mean_loss = 0.0;
    double mean_grad_norm = 0.0;         // pre-clip
    double max_clipped_grad_norm = 0.0;  // post-clip, must stay <= C
    double eps_so_far = 0.0;             // accountant estimate after this step
};

struct TrainResult {
    MlpParams params;
    PrivacyBudget spent;  // (eps_sgd, delta_sgd); eps is infinite when sigma == 0
    std::vector<StepRecord> history;
    long steps = 0;
    double q = 0.0;  // batch sampling ratio B/N used for accounting
    double sigma = 0.0;
    double tau = 0.0;
    bool sigma_exceeds_tau = false;  // moments-bound validity warning
};

// Rescales every column of the matrix to l1 norm <= tau; the sparsity
// pattern is preserved.
ApprMatrix clip_columns(ApprMatrix pi, double tau);

inline long steps_per_epoch(int m, int batch) { return (m + batch - 1) / batch; }
inline long total_steps(int m, int batch, int epochs) {
    return static_cast<long>(epochs) * steps_per_epoch(m, batch);
}

// DP-SGD over the M sampled nodes: column-clip the matrix, then per step
// draw a batch (epoch-shuffled blocks of V_M), compute per-node gradients
// through the clipped rows, clip each to l2 norm <= C, sum, add one
// N(0, sigma^2 C^2) draw per coordinate, divide by the configured batch
// size, and step the parameters. Deterministic given cfg.seed.
TrainResult train(const DatasetSplit& split, const ApprMatrix& pi, MlpParams initial,
                  const TrainConfig& cfg);

void save_train_log(const TrainResult& result, const std::string& path);

}  // namespace dpar
