#include "dpar/trainer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dpar/errors.hpp"
#include "dpar/rng.hpp"

namespace dpar {

ApprMatrix clip_columns(ApprMatrix pi, double tau) {
    if (tau <= 0.0) throw ConfigError("tau must be positive");
    if (std::isinf(tau)) return pi;
    std::vector<double> col_norm(pi.n_cols, 0.0);
    for (const auto& row : pi.rows) {
        for (const auto& [idx, w] : row.entries) col_norm[idx] += std::abs(w);
    }
    std::vector<double> scale(pi.n_cols, 1.0);
    for (int j = 0; j < pi.n_cols; ++j) {
        if (col_norm[j] > tau) scale[j] = tau / col_norm[j];
    }
    for (auto& row : pi.rows) {
        for (auto& [idx, w] : row.entries) w *= scale[idx];
    }
    return pi;
}

TrainResult train(const DatasetSplit& split, const ApprMatrix& pi, MlpParams initial,
                  const TrainConfig& cfg) {
    const Graph& g = split.train_graph;
    const int m = static_cast<int>(split.v_m.size());
    if (static_cast<int>(pi.rows.size()) != m) {
        throw ConfigError("matrix row count does not match |v_m|");
    }
    for (int i = 0; i < m; ++i) {
        if (pi.rows[i].source != split.v_m[i]) {
            throw ConfigError("matrix rows are not aligned with v_m");
        }
    }
    if (cfg.batch <= 0 || cfg.batch > m) throw ConfigError("need 0 < batch <= M");
    if (cfg.lr <= 0.0) throw ConfigError("lr must be positive");
    if (cfg.epochs <= 0) throw ConfigError("epochs must be positive");
    if (cfg.clip_grad <= 0.0) throw ConfigError("clip_grad must be positive");
    if (cfg.sigma < 0.0) throw ConfigError("sigma must be nonnegative");
    if (cfg.sigma > 0.0 && !(cfg.delta_sgd > 0.0 && cfg.delta_sgd < 1.0)) {
        throw ConfigError("noised training requires delta_sgd in (0,1)");
    }

    const ApprMatrix clipped = clip_columns(pi, cfg.tau);
    if (!std::isinf(cfg.tau)) {
        const double max_col = clipped.max_column_l1();
        assert(max_col <= cfg.tau * (1.0 + 1e-12));
        if (max_col > cfg.tau * (1.0 + 1e-9)) {
            throw ConfigError("column clipping failed to establish the tau bound");
        }
    }

    TrainResult result;
    result.q = static_cast<double>(cfg.batch) / static_cast<double>(g.n_nodes);
    result.sigma = cfg.sigma;
    result.tau = cfg.tau;
    result.steps = total_steps(m, cfg.batch, cfg.epochs);
    result.sigma_exceeds_tau = cfg.sigma > cfg.tau;

    SgdAccountParams account{result.q, cfg.tau, cfg.sigma, 0, cfg.delta_sgd};
    const bool track_eps = cfg.sigma > 0.0;

    Rng batch_rng(cfg.seed, "batch");
    Rng noise_rng(cfg.seed, "sgd-noise");
    MlpParams theta = std::move(initial);
    const long n_params = theta.n_params();
    const double noise_std = cfg.sigma * cfg.clip_grad;

    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;

    Eigen::VectorXd grad_sum(n_params);
    const long per_epoch = steps_per_epoch(m, cfg.batch);
    long step = 0;
    result.history.reserve(result.steps);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = m - 1; i > 0; --i) {
            const auto j =
                static_cast<int>(batch_rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[i], order[j]);
        }
        for (long b = 0; b < per_epoch; ++b) {
            const int begin = static_cast<int>(b) * cfg.batch;
            const int end = std::min(begin + cfg.batch, m);
            grad_sum.setZero();
            double loss_sum = 0.0;
            double norm_sum = 0.0;
            double max_clipped = 0.0;
            for (int pos = begin; pos < end; ++pos) {
                const int row_idx = order[pos];
                const int node = split.v_m[row_idx];
                LossGrad lg =
                    loss_and_grad(theta, g, node, clipped.rows[row_idx], g.labels[node]);
                if (!std::isfinite(lg.loss) || !lg.grad.values.allFinite()) {
                    throw CalibrationError("non-finite loss or gradient at step " +
                                           std::to_string(step + 1));
                }
                const double scale =
                    1.0 / std::max(1.0, lg.grad.l2_norm / cfg.clip_grad);
                grad_sum += scale * lg.grad.values;
                loss_sum += lg.loss;
                norm_sum += lg.grad.l2_norm;
                const double clipped_norm = scale * lg.grad.l2_norm;
                assert(clipped_norm <= cfg.clip_grad * (1.0 + 1e-12));
                max_clipped = std::max(max_clipped, clipped_norm);
            }
            if (cfg.sigma > 0.0) {
                for (long i = 0; i < n_params; ++i) {
                    grad_sum[i] += noise_rng.gaussian(noise_std);
                }
            }
            grad_sum /= static_cast<double>(cfg.batch);
            theta.axpy(-cfg.lr, grad_sum);

            ++step;
            StepRecord rec;
            rec.step = step;
            const int batch_n = end - begin;
            rec.mean_loss = loss_sum / batch_n;
            rec.mean_grad_norm = norm_sum / batch_n;
            rec.max_clipped_grad_norm = max_clipped;
            if (track_eps) {
                account.steps = step;
                rec.eps_so_far = accounting::sgd_epsilon(account);
            } else {
                rec.eps_so_far = std::numeric_limits<double>::infinity();
            }
            result.history.push_back(rec);
        }
    }

    account.steps = result.steps;
    result.spent = {track_eps ? accounting::sgd_epsilon(account)
                              : std::numeric_limits<double>::infinity(),
                    cfg.delta_sgd};
    result.params = std::move(theta);
    return result;
}

void save_train_log(const TrainResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot open '" + path + "' for writing");
    char buf[160];
    out << "step mean_loss mean_grad_norm max_clipped_grad_norm eps_so_far\n";
    for (const auto& rec : result.history) {
        std::snprintf(buf, sizeof(buf), "%ld %.17g %.17g %.17g %.17g\n", rec.step,
                      rec.mean_loss, rec.mean_grad_norm, rec.max_clipped_grad_norm,
                      rec.eps_so_far);
        out << buf;
    }
}

}  // namespace dpar
