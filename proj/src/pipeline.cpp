#include "dpar/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "dpar/errors.hpp"
#include "dpar/eval.hpp"

namespace dpar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void append_kv(std::string& out, const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s=%.17g\n", key, v);
    out += buf;
}

void append_kv(std::string& out, const char* key, long v) {
    out += key;
    out += '=';
    out += std::to_string(v);
    out += '\n';
}

}  // namespace

ApprStageSetup derive_appr_stage(const RunConfig& cfg, PrivacyBudget pr_target, int m) {
    ApprStageSetup setup;
    setup.target = pr_target;
    if (cfg.mechanism == "features" || cfg.mechanism == "none") return setup;
    if (pr_target.epsilon <= 0.0) {
        throw ConfigError("mechanism '" + cfg.mechanism +
                          "' needs a positive matrix-stage budget; got eps_pr=" +
                          std::to_string(pr_target.epsilon));
    }
    setup.row_cost = accounting::optimal_decompose(pr_target, m);
    setup.row_delta = pr_target.delta / (2.0 * m);
    if (cfg.mechanism == "gm") {
        setup.gm_eps = setup.row_cost;
        setup.gm_sigma = accounting::gaussian_sigma(setup.gm_eps, setup.row_delta, cfg.c1);
        return setup;
    }
    double selection_cost = setup.row_cost;
    if (cfg.mechanism == "em1") {
        setup.em_eps2 = cfg.eps2 > 0.0 ? cfg.eps2 : 0.5 * setup.row_cost;
        if (setup.em_eps2 >= setup.row_cost) {
            throw ConfigError("eps2 consumes the whole per-row budget");
        }
        selection_cost = setup.row_cost - setup.em_eps2;
    }
    setup.em_eps = accounting::em_eps_from_cost(selection_cost, cfg.k, setup.row_delta);
    return setup;
}

ApprMatrix build_appr_matrix(const Graph& train_graph, const std::vector<int>& v_m,
                             const RunConfig& cfg, const ApprStageSetup& setup) {
    const ApprParams params{cfg.alpha, cfg.rho, cfg.gamma, 10000};
    if (cfg.mechanism == "none") {
        return topk_appr(train_graph, v_m, params, cfg.k);
    }
    if (cfg.mechanism == "features") {
        return feature_identity_rows(v_m, train_graph.n_nodes);
    }
    const NoiseRng noise{cfg.seed, Rng::stream_id("appr-noise")};
    if (cfg.mechanism == "gm") {
        const GmConfig gm{setup.gm_eps, setup.row_delta, cfg.c1, cfg.k};
        return dp_appr_gm(train_graph, v_m, params, gm, noise);
    }
    EmConfig em;
    em.eps = setup.em_eps;
    em.eps_values = setup.em_eps2;
    em.delta = setup.row_delta;
    em.clip = cfg.c2;
    em.k = cfg.k;
    em.option = cfg.mechanism == "em1" ? EmOption::kNoisyValues : EmOption::kUniformValues;
    return dp_appr_em(train_graph, v_m, params, em, noise);
}

PipelineResult run_pipeline(const Graph& g, const RunConfig& cfg) {
    cfg.validate();
    const bool non_private = cfg.mechanism == "none";

    const SplitSpec split_spec{cfg.train_frac, cfg.q_prime, cfg.m, cfg.seed};
    const DatasetSplit split = inductive_split(g, split_spec);

    PrivacyBudget pr_target{0.0, 0.0};
    PrivacyBudget sgd_target{0.0, 0.0};
    if (cfg.mechanism == "features") {
        // Structure-free rows cost nothing; the whole budget goes to DP-SGD.
        sgd_target = {cfg.eps / cfg.q_prime, cfg.delta};
    } else if (!non_private) {
        const auto [pr, sgd] =
            accounting::split_budget({cfg.eps, cfg.delta}, cfg.ratio_pr, cfg.q_prime);
        pr_target = pr;
        sgd_target = sgd;
    }

    const ApprStageSetup setup = derive_appr_stage(cfg, pr_target, cfg.m);
    const ApprMatrix pi = build_appr_matrix(split.train_graph, split.v_m, cfg, setup);

    TrainConfig tc;
    tc.lr = cfg.lr;
    tc.batch = cfg.batch;
    tc.epochs = cfg.epochs;
    tc.seed = cfg.seed;
    if (non_private) {
        tc.clip_grad = kInf;
        tc.tau = kInf;
        tc.sigma = 0.0;
        tc.delta_sgd = 0.0;
    } else {
        tc.clip_grad = cfg.clip_grad;
        tc.tau = cfg.tau;
        tc.delta_sgd = sgd_target.delta;
        if (cfg.auto_sigma) {
            const long steps = total_steps(cfg.m, cfg.batch, cfg.epochs);
            const double q =
                static_cast<double>(cfg.batch) / static_cast<double>(split.train_graph.n_nodes);
            tc.sigma = accounting::calibrate_sigma(sgd_target.epsilon, q, cfg.tau, steps,
                                                   sgd_target.delta);
        } else {
            tc.sigma = cfg.sigma;
        }
    }

    Rng init_rng(cfg.seed, "init");
    MlpParams initial = init_mlp(split.train_graph.d, cfg.hidden, split.train_graph.c, init_rng);
    const TrainResult trained = train(split, pi, std::move(initial), tc);

    const EvalConfig eval_cfg{cfg.power_iters, cfg.alpha};
    const Eigen::MatrixXd predictions =
        power_iteration_predict(trained.params, split.test_graph, eval_cfg);

    PipelineResult result;
    result.cfg = cfg;
    result.pr = pi.spent;
    result.sgd = trained.spent;
    result.total = non_private
                       ? PrivacyBudget{kInf, 0.0}
                       : accounting::total_budget(pi.spent.epsilon, pi.spent.delta,
                                                  trained.spent.epsilon,
                                                  trained.spent.delta, cfg.q_prime);
    result.test_accuracy = accuracy(predictions, split.test_graph.labels);
    result.sigma = trained.sigma;
    result.steps = trained.steps;
    result.q_batch = trained.q;
    result.sigma_exceeds_tau = trained.sigma_exceeds_tau;
    result.n_nodes = g.n_nodes;
    result.train_nodes = split.train_graph.n_nodes;
    result.test_nodes = split.test_graph.n_nodes;
    return result;
}

std::string format_metrics(const PipelineResult& r) {
    std::string out;
    out += "mechanism=" + r.cfg.mechanism + "\n";
    append_kv(out, "seed", static_cast<long>(r.cfg.seed));
    append_kv(out, "nodes", static_cast<long>(r.n_nodes));
    append_kv(out, "train_nodes", static_cast<long>(r.train_nodes));
    append_kv(out, "test_nodes", static_cast<long>(r.test_nodes));
    append_kv(out, "m", static_cast<long>(r.cfg.m));
    append_kv(out, "k", static_cast<long>(r.cfg.k));
    append_kv(out, "batch", static_cast<long>(r.cfg.batch));
    append_kv(out, "epochs", static_cast<long>(r.cfg.epochs));
    append_kv(out, "hidden", static_cast<long>(r.cfg.hidden));
    append_kv(out, "lr", r.cfg.lr);
    append_kv(out, "alpha", r.cfg.alpha);
    append_kv(out, "rho", r.cfg.rho);
    append_kv(out, "gamma", r.cfg.gamma);
    append_kv(out, "train_frac", r.cfg.train_frac);
    append_kv(out, "q_prime", r.cfg.q_prime);
    append_kv(out, "ratio_pr", r.cfg.ratio_pr);
    append_kv(out, "c1", r.cfg.c1);
    append_kv(out, "c2", r.cfg.c2);
    append_kv(out, "clip_grad", r.cfg.clip_grad);
    append_kv(out, "tau", r.cfg.tau);
    append_kv(out, "power_iters", static_cast<long>(r.cfg.power_iters));
    append_kv(out, "eps_requested", r.cfg.eps);
    append_kv(out, "delta_requested", r.cfg.delta);
    append_kv(out, "eps_pr", r.pr.epsilon);
    append_kv(out, "delta_pr", r.pr.delta);
    append_kv(out, "eps_sgd", r.sgd.epsilon);
    append_kv(out, "delta_sgd", r.sgd.delta);
    append_kv(out, "eps_total", r.total.epsilon);
    append_kv(out, "delta_total", r.total.delta);
    append_kv(out, "sigma", r.sigma);
    append_kv(out, "steps", r.steps);
    append_kv(out, "q_batch", r.q_batch);
    append_kv(out, "sigma_exceeds_tau", static_cast<long>(r.sigma_exceeds_tau ? 1 : 0));
    append_kv(out, "lambda_cap", static_cast<long>(accounting::kLambdaMax));
    append_kv(out, "test_accuracy", r.test_accuracy);
    return out;
}

}  // namespace dpar
