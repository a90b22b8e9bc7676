#include "dpar/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "dpar/accountant.hpp"
#include "dpar/config.hpp"
#include "dpar/dp_appr.hpp"
#include "dpar/errors.hpp"
#include "dpar/eval.hpp"
#include "dpar/pipeline.hpp"
#include "dpar/trainer.hpp"

namespace dpar::cli {

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot open '" + path + "' for writing");
    out << text;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoull(tok));
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

struct GraphPaths {
    std::string edges, features, labels;
};

void add_graph_flags(CLI::App* cmd, GraphPaths& paths) {
    cmd->add_option("--edges", paths.edges, "edge list file (tab separated)")->required();
    cmd->add_option("--features", paths.features, "feature CSV file")->required();
    cmd->add_option("--labels", paths.labels, "label file")->required();
}

void write_train_meta(const std::string& path, const TrainResult& r,
                      const TrainConfig& tc) {
    std::string text;
    text += "eps_sgd=" + fmt(r.spent.epsilon) + "\n";
    text += "delta_sgd=" + fmt(r.spent.delta) + "\n";
    text += "sigma=" + fmt(r.sigma) + "\n";
    text += "tau=" + fmt(r.tau) + "\n";
    text += "clip_grad=" + fmt(tc.clip_grad) + "\n";
    text += "batch=" + std::to_string(tc.batch) + "\n";
    text += "epochs=" + std::to_string(tc.epochs) + "\n";
    text += "steps=" + std::to_string(r.steps) + "\n";
    text += "q_batch=" + fmt(r.q) + "\n";
    text += "sigma_exceeds_tau=" + std::string(r.sigma_exceeds_tau ? "1" : "0") + "\n";
    text += "seed=" + std::to_string(tc.seed) + "\n";
    write_text(path, text);
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StageError("cannot open '" + path + "' for reading");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 const std::string& path) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(path + ": missing key '" + key + "'");
    return std::strtod(it->second.c_str(), nullptr);
}

// --- subcommands -----------------------------------------------------------

struct SynthOpts {
    int nodes = 300;
    int communities = 3;
    double p_in = 0.1;
    double p_out = 0.005;
    int dim = 16;
    double noise = 0.5;
    std::uint64_t seed = 1;
    std::string out;
};

void setup_synth(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "generate a synthetic block-model graph");
    auto opts = std::make_shared<SynthOpts>();
    cmd->add_option("--nodes", opts->nodes, "node count");
    cmd->add_option("--communities", opts->communities, "community count");
    cmd->add_option("--p-in", opts->p_in, "within-community edge probability");
    cmd->add_option("--p-out", opts->p_out, "cross-community edge probability");
    cmd->add_option("--dim", opts->dim, "feature dimension");
    cmd->add_option("--noise", opts->noise, "feature noise standard deviation");
    cmd->add_option("--seed", opts->seed, "random seed");
    cmd->add_option("--out", opts->out, "output directory")->required();
    cmd->callback([opts]() {
        const Graph g = generate_sbm(opts->nodes, opts->communities, opts->p_in,
                                     opts->p_out, opts->dim, opts->noise, opts->seed);
        std::filesystem::create_directories(opts->out);
        const std::string base = opts->out + "/";
        save_graph(g, base + "edges.tsv", base + "features.csv", base + "labels.txt");
        std::cout << "wrote " << base << "{edges.tsv,features.csv,labels.txt}: " << g.n_nodes
                  << " nodes, " << g.n_edges() << " edges, d=" << g.d << ", c=" << g.c
                  << "\n";
    });
}

struct PrepareOpts {
    double train_frac = 0.8;
    double sample_rate = 0.09;
    int m = 70;
    std::uint64_t seed = 1;
    std::string out;
};

void setup_prepare(CLI::App& app) {
    auto* cmd = app.add_subcommand("prepare", "inductive split and node sampling");
    auto paths = std::make_shared<GraphPaths>();
    add_graph_flags(cmd, *paths);
    auto opts = std::make_shared<PrepareOpts>();
    cmd->add_option("--train-frac", opts->train_frac, "training node fraction");
    cmd->add_option("--sample-rate", opts->sample_rate, "per-node retention rate q'");
    cmd->add_option("--m", opts->m, "number of matrix rows M");
    cmd->add_option("--seed", opts->seed, "random seed");
    cmd->add_option("--out", opts->out, "split manifest path")->required();
    cmd->callback([paths, opts]() {
        const Graph g = load_graph(paths->edges, paths->features, paths->labels);
        const SplitSpec spec{opts->train_frac, opts->sample_rate, opts->m, opts->seed};
        const DatasetSplit split = inductive_split(g, spec);
        save_split(split, opts->out);
        std::cout << "wrote " << opts->out << ": " << split.train_graph.n_nodes
                  << " train nodes, " << split.test_graph.n_nodes << " test nodes, M="
                  << split.v_m.size() << "\n";
    });
}

struct ApprOpts {
    std::string split;
    std::string mechanism = "em0";
    double eps = 1.0;   // mechanism-level budget (per entry for em, per row for gm)
    double eps2 = 0.0;  // em1 value budget
    double delta = 1e-5;
    double clip = -1.0;  // default depends on the mechanism
    int k = 2;
    double alpha = 0.25;
    double rho = 1e-4;
    double gamma = 1e-4;
    std::uint64_t seed = 1;
    std::string out;
};

void setup_appr(CLI::App& app) {
    auto* cmd = app.add_subcommand("appr", "build the private top-K matrix");
    auto paths = std::make_shared<GraphPaths>();
    add_graph_flags(cmd, *paths);
    auto opts = std::make_shared<ApprOpts>();
    cmd->add_option("--split", opts->split, "split manifest from prepare")->required();
    cmd->add_option("--mechanism", opts->mechanism, "em0 | em1 | gm | features | none");
    cmd->add_option("--eps", opts->eps,
                    "mechanism budget (per entry for em, per row for gm)");
    cmd->add_option("--eps2", opts->eps2, "em1 extra budget for noisy values");
    cmd->add_option("--delta", opts->delta, "per-row delta");
    cmd->add_option("--clip", opts->clip, "clip bound (C2 for em, C1 for gm)");
    cmd->add_option("--k", opts->k, "entries kept per row");
    cmd->add_option("--alpha", opts->alpha, "teleportation constant");
    cmd->add_option("--rho", opts->rho, "solver sparsity weight");
    cmd->add_option("--gamma", opts->gamma, "solver stopping tolerance");
    cmd->add_option("--seed", opts->seed, "noise seed");
    cmd->add_option("--out", opts->out, "matrix output path")->required();
    cmd->callback([paths, opts]() {
        const Graph g = load_graph(paths->edges, paths->features, paths->labels);
        const DatasetSplit split = load_split(g, opts->split);
        const ApprParams params{opts->alpha, opts->rho, opts->gamma, 10000};
        const NoiseRng noise{opts->seed, Rng::stream_id("appr-noise")};
        ApprMatrix matrix;
        if (opts->mechanism == "none") {
            matrix = topk_appr(split.train_graph, split.v_m, params, opts->k);
        } else if (opts->mechanism == "features") {
            matrix = feature_identity_rows(split.v_m, split.train_graph.n_nodes);
        } else if (opts->mechanism == "gm") {
            const double clip = opts->clip > 0.0 ? opts->clip : 0.01;
            const GmConfig cfg{opts->eps, opts->delta, clip, opts->k};
            matrix = dp_appr_gm(split.train_graph, split.v_m, params, cfg, noise);
        } else if (opts->mechanism == "em0" || opts->mechanism == "em1") {
            EmConfig cfg;
            cfg.eps = opts->eps;
            cfg.eps_values = opts->eps2;
            cfg.delta = opts->delta;
            cfg.clip = opts->clip > 0.0 ? opts->clip : 0.001;
            cfg.k = opts->k;
            cfg.option = opts->mechanism == "em1" ? EmOption::kNoisyValues
                                                  : EmOption::kUniformValues;
            matrix = dp_appr_em(split.train_graph, split.v_m, params, cfg, noise);
        } else {
            throw ConfigError("unknown mechanism '" + opts->mechanism + "'");
        }
        matrix.seed = opts->seed;
        save_appr_matrix(matrix, opts->out);
        std::cout << "wrote " << opts->out << ": " << matrix.rows.size() << " rows over "
                  << matrix.n_cols << " columns, spent (eps_pr=" << fmt(matrix.spent.epsilon)
                  << ", delta_pr=" << fmt(matrix.spent.delta) << ")\n";
    });
}

struct TrainOpts {
    std::string split, appr;
    double eps = 0.0;  // target eps_sgd for calibration
    double delta = 1e-5;
    double sigma = -1.0;  // explicit noise multiplier; <0 means calibrate from --eps
    int batch = 60;
    int epochs = 200;
    double lr = 0.005;
    double clip_grad = 1.0;
    double tau = 1.0;
    int hidden = 32;
    std::uint64_t seed = 1;
    std::string out;
    std::string log;
};

void setup_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "private training over the sampled rows");
    auto paths = std::make_shared<GraphPaths>();
    add_graph_flags(cmd, *paths);
    auto opts = std::make_shared<TrainOpts>();
    cmd->add_option("--split", opts->split, "split manifest")->required();
    cmd->add_option("--appr", opts->appr, "matrix from the appr stage")->required();
    cmd->add_option("--eps", opts->eps, "target eps for noise calibration");
    cmd->add_option("--delta", opts->delta, "accounting delta");
    cmd->add_option("--sigma", opts->sigma,
                    "explicit noise multiplier (skips calibration; 0 disables noise)");
    cmd->add_option("--batch", opts->batch, "batch size");
    cmd->add_option("--epochs", opts->epochs, "training epochs");
    cmd->add_option("--lr", opts->lr, "learning rate");
    cmd->add_option("--clip-grad", opts->clip_grad, "per-node gradient l2 bound");
    cmd->add_option("--tau", opts->tau, "column l1 clip bound");
    cmd->add_option("--hidden", opts->hidden, "hidden layer width");
    cmd->add_option("--seed", opts->seed, "training seed");
    cmd->add_option("--out", opts->out, "model checkpoint path")->required();
    cmd->add_option("--log", opts->log, "per-step training log path");
    cmd->callback([paths, opts]() {
        const Graph g = load_graph(paths->edges, paths->features, paths->labels);
        const DatasetSplit split = load_split(g, opts->split);
        const ApprMatrix pi = load_appr_matrix(opts->appr);

        TrainConfig tc;
        tc.lr = opts->lr;
        tc.batch = opts->batch;
        tc.epochs = opts->epochs;
        tc.clip_grad = opts->clip_grad;
        tc.tau = opts->tau;
        tc.delta_sgd = opts->delta;
        tc.seed = opts->seed;
        if (opts->sigma >= 0.0) {
            tc.sigma = opts->sigma;
        } else if (opts->eps > 0.0) {
            const long steps = total_steps(static_cast<int>(split.v_m.size()),
                                           opts->batch, opts->epochs);
            const double q = static_cast<double>(opts->batch) /
                             static_cast<double>(split.train_graph.n_nodes);
            tc.sigma =
                accounting::calibrate_sigma(opts->eps, q, opts->tau, steps, opts->delta);
        } else {
            throw ConfigError("set --sigma explicitly or give a target --eps to calibrate");
        }

        Rng init_rng(opts->seed, "init");
        MlpParams initial =
            init_mlp(split.train_graph.d, opts->hidden, split.train_graph.c, init_rng);
        const TrainResult result = train(split, pi, std::move(initial), tc);
        save_mlp(result.params, opts->out);
        write_train_meta(opts->out + ".meta", result, tc);
        if (!opts->log.empty()) save_train_log(result, opts->log);
        std::cout << "wrote " << opts->out << ": " << result.steps << " steps, sigma="
                  << fmt(result.sigma) << ", eps_sgd=" << fmt(result.spent.epsilon)
                  << (result.sigma_exceeds_tau ? " (warning: sigma > tau)" : "") << "\n";
    });
}

struct EvalOpts {
    std::string split, appr, model;
    int power_iters = 2;
    double alpha = 0.25;
    std::string out;
    std::string embeddings;
};

void setup_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "power-iteration inference and metrics");
    auto paths = std::make_shared<GraphPaths>();
    add_graph_flags(cmd, *paths);
    auto opts = std::make_shared<EvalOpts>();
    cmd->add_option("--split", opts->split, "split manifest")->required();
    cmd->add_option("--appr", opts->appr, "matrix file (for the spent budget)")->required();
    cmd->add_option("--model", opts->model, "model checkpoint")->required();
    cmd->add_option("--power-iters", opts->power_iters, "propagation steps P");
    cmd->add_option("--alpha", opts->alpha, "teleportation constant");
    cmd->add_option("--out", opts->out, "metrics output path (stdout when omitted)");
    cmd->add_option("--embeddings", opts->embeddings, "optional embedding CSV export");
    cmd->callback([paths, opts]() {
        const Graph g = load_graph(paths->edges, paths->features, paths->labels);
        const DatasetSplit split = load_split(g, opts->split);
        const ApprMatrix pi = load_appr_matrix(opts->appr);
        const MlpParams model = load_mlp(opts->model);
        const std::string meta_path = opts->model + ".meta";
        const auto meta = read_kv_file(meta_path);

        const EvalConfig cfg{opts->power_iters, opts->alpha};
        const Eigen::MatrixXd predictions =
            power_iteration_predict(model, split.test_graph, cfg);
        const double acc = accuracy(predictions, split.test_graph.labels);

        const double eps_sgd = kv_double(meta, "eps_sgd", meta_path);
        const double delta_sgd = kv_double(meta, "delta_sgd", meta_path);
        const PrivacyBudget total = accounting::total_budget(
            pi.spent.epsilon, pi.spent.delta, eps_sgd, delta_sgd, split.spec.sample_rate);

        std::string text;
        text += "mechanism=" + pi.mechanism + "\n";
        text += "seed=" + std::to_string(split.spec.seed) + "\n";
        text += "m=" + std::to_string(split.v_m.size()) + "\n";
        text += "k=" + std::to_string(pi.k) + "\n";
        text += "train_nodes=" + std::to_string(split.train_graph.n_nodes) + "\n";
        text += "test_nodes=" + std::to_string(split.test_graph.n_nodes) + "\n";
        text += "q_prime=" + fmt(split.spec.sample_rate) + "\n";
        text += "power_iters=" + std::to_string(opts->power_iters) + "\n";
        text += "alpha=" + fmt(opts->alpha) + "\n";
        text += "eps_pr=" + fmt(pi.spent.epsilon) + "\n";
        text += "delta_pr=" + fmt(pi.spent.delta) + "\n";
        text += "eps_sgd=" + fmt(eps_sgd) + "\n";
        text += "delta_sgd=" + fmt(delta_sgd) + "\n";
        text += "sigma=" + fmt(kv_double(meta, "sigma", meta_path)) + "\n";
        text += "tau=" + fmt(kv_double(meta, "tau", meta_path)) + "\n";
        text += "steps=" +
                std::to_string(static_cast<long>(kv_double(meta, "steps", meta_path))) +
                "\n";
        text += "q_batch=" + fmt(kv_double(meta, "q_batch", meta_path)) + "\n";
        text += "sigma_exceeds_tau=" +
                std::to_string(
                    static_cast<long>(kv_double(meta, "sigma_exceeds_tau", meta_path))) +
                "\n";
        text += "lambda_cap=" + std::to_string(accounting::kLambdaMax) + "\n";
        text += "eps_total=" + fmt(total.epsilon) + "\n";
        text += "delta_total=" + fmt(total.delta) + "\n";
        text += "test_accuracy=" + fmt(acc) + "\n";
        if (opts->out.empty()) {
            std::cout << text;
        } else {
            write_text(opts->out, text);
            std::cout << "wrote " << opts->out << ": test_accuracy=" << fmt(acc) << "\n";
        }
        if (!opts->embeddings.empty()) {
            export_embeddings(model, split.test_graph, opts->embeddings);
        }
    });
}

struct AccountOpts {
    std::string mechanism = "gm";
    double eps = 1.0;  // mechanism-level budget input
    double eps2 = 0.0;
    double delta = 1e-5;
    double c1 = 0.01;
    double c2 = 0.001;
    int k = 2;
    int m = 70;
    double q_prime = 0.09;
    // optional DP-SGD stage
    double sigma = -1.0;
    double tau = 1.0;
    double q_batch = -1.0;
    long steps = -1;
    double delta_sgd = -1.0;
};

void setup_account(CLI::App& app) {
    auto* cmd = app.add_subcommand("account", "budget arithmetic report");
    auto opts = std::make_shared<AccountOpts>();
    cmd->add_option("--mechanism", opts->mechanism, "em0 | em1 | gm");
    cmd->add_option("--eps", opts->eps, "per-entry (em) or per-row (gm) budget");
    cmd->add_option("--eps2", opts->eps2, "em1 value budget");
    cmd->add_option("--delta", opts->delta, "per-row delta");
    cmd->add_option("--c1", opts->c1, "gm l2 clip bound");
    cmd->add_option("--c2", opts->c2, "em entry clip bound");
    cmd->add_option("--k", opts->k, "entries kept per row");
    cmd->add_option("--m", opts->m, "number of rows composed");
    cmd->add_option("--q-prime", opts->q_prime, "node sampling rate");
    cmd->add_option("--sigma", opts->sigma, "DP-SGD noise multiplier");
    cmd->add_option("--tau", opts->tau, "column l1 bound");
    cmd->add_option("--q-batch", opts->q_batch, "batch sampling ratio B/N");
    cmd->add_option("--steps", opts->steps, "DP-SGD steps T");
    cmd->add_option("--delta-sgd", opts->delta_sgd, "DP-SGD delta");
    cmd->callback([opts]() {
        std::string text = "accounting report\n";
        text += "mechanism=" + opts->mechanism + "\n";
        text += "m=" + std::to_string(opts->m) + "\n";
        text += "per_row_delta=" + fmt(opts->delta) + "\n";
        PrivacyBudget pr{0.0, 0.0};
        if (opts->mechanism == "gm") {
            text += "gm_eps=" + fmt(opts->eps) + "\n";
            text += "gm_c1=" + fmt(opts->c1) + "\n";
            text += "gm_sigma=" +
                    fmt(accounting::gaussian_sigma(opts->eps, opts->delta, opts->c1)) +
                    "\n";
            pr = accounting::gm_matrix_budget(opts->eps, opts->delta, opts->m);
        } else if (opts->mechanism == "em0" || opts->mechanism == "em1") {
            const bool noisy_values = opts->mechanism == "em1";
            const double eps2 = noisy_values ? opts->eps2 : 0.0;
            text += "em_eps=" + fmt(opts->eps) + "\n";
            text += "em_c2=" + fmt(opts->c2) + "\n";
            text += "em_gumbel_beta=" + fmt(opts->c2 / opts->eps) + "\n";
            text += "em_k=" + std::to_string(opts->k) + "\n";
            const double row_cost =
                accounting::em_topk_cost(opts->eps, opts->k, opts->delta) + eps2;
            text += "em_row_cost=" + fmt(row_cost) + "\n";
            if (noisy_values) text += "em_eps2=" + fmt(eps2) + "\n";
            pr = accounting::em_matrix_budget(opts->eps, eps2, opts->k, opts->delta,
                                              opts->m);
        } else {
            throw ConfigError("account: unknown mechanism '" + opts->mechanism + "'");
        }
        text += "composition=optimal_strong_composition\n";
        text += "eps_pr=" + fmt(pr.epsilon) + "\n";
        text += "delta_pr=" + fmt(pr.delta) + "\n";

        const bool has_sgd = opts->sigma >= 0.0 && opts->q_batch > 0.0 &&
                             opts->steps >= 0 && opts->delta_sgd > 0.0;
        if (has_sgd) {
            const SgdAccountParams p{opts->q_batch, opts->tau, opts->sigma, opts->steps,
                                     opts->delta_sgd};
            const auto detail = accounting::sgd_epsilon_detail(p);
            text += "sgd_q=" + fmt(p.q) + "\n";
            text += "sgd_tau=" + fmt(p.tau) + "\n";
            text += "sgd_sigma=" + fmt(p.sigma) + "\n";
            text += "sgd_steps=" + std::to_string(p.steps) + "\n";
            text += "sgd_delta=" + fmt(p.delta) + "\n";
            text += "sgd_rule=moments_accountant_lambda_1_to_" +
                    std::to_string(accounting::kLambdaMax) + "\n";
            text += "eps_sgd=" + fmt(detail.epsilon) + "\n";
            text += "lambda_star=" + std::to_string(detail.lambda) + "\n";
            text += "warning_lambda_cap_hit=" +
                    std::string(detail.lambda_cap_hit ? "1" : "0") + "\n";
            text += "warning_sigma_exceeds_tau=" +
                    std::string(accounting::sigma_exceeds_tau(p) ? "1" : "0") + "\n";
            const PrivacyBudget total = accounting::total_budget(
                pr.epsilon, pr.delta, detail.epsilon, opts->delta_sgd, opts->q_prime);
            text += "q_prime=" + fmt(opts->q_prime) + "\n";
            text += "total_rule=subsampled_sequential_composition\n";
            text += "eps_total=" + fmt(total.epsilon) + "\n";
            text += "delta_total=" + fmt(total.delta) + "\n";
        }
        std::cout << text;
    });
}

struct SweepOpts {
    std::string config;
    double total_eps = 8.0;
    double total_delta = 2e-3;
    std::string ratios = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
    std::string seeds = "1,2,3,4,5";
    std::string mechanisms = "em0,em1,gm";
    std::string out;
    double train_frac = -1.0, q_prime = -1.0, tau = -1.0;
    int m = -1, batch = -1, epochs = -1, k = -1;
};

void setup_sweep(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "budget-ratio grid over full pipeline runs");
    auto paths = std::make_shared<GraphPaths>();
    add_graph_flags(cmd, *paths);
    auto opts = std::make_shared<SweepOpts>();
    cmd->add_option("--config", opts->config, "key=value config file");
    cmd->add_option("--total-eps", opts->total_eps, "total epsilon per run");
    cmd->add_option("--total-delta", opts->total_delta, "total delta per run");
    cmd->add_option("--ratios", opts->ratios, "comma list of matrix-stage ratios");
    cmd->add_option("--seeds", opts->seeds, "comma list of seeds");
    cmd->add_option("--mechanisms", opts->mechanisms,
                    "comma list of mechanisms (features runs ratio-free)");
    cmd->add_option("--train-frac", opts->train_frac, "training fraction override");
    cmd->add_option("--q-prime", opts->q_prime, "sampling rate override");
    cmd->add_option("--tau", opts->tau, "column clip override");
    cmd->add_option("--m", opts->m, "row count override");
    cmd->add_option("--batch", opts->batch, "batch size override");
    cmd->add_option("--epochs", opts->epochs, "epoch override");
    cmd->add_option("--k", opts->k, "top-k override");
    cmd->add_option("--out", opts->out, "CSV output path")->required();
    cmd->callback([paths, opts]() {
        RunConfig base;
        if (!opts->config.empty()) base = load_config_file(opts->config, base);
        base.eps = opts->total_eps;
        base.delta = opts->total_delta;
        if (opts->train_frac > 0.0) base.train_frac = opts->train_frac;
        if (opts->q_prime > 0.0) base.q_prime = opts->q_prime;
        if (opts->tau > 0.0) base.tau = opts->tau;
        if (opts->m > 0) base.m = opts->m;
        if (opts->batch > 0) base.batch = opts->batch;
        if (opts->epochs > 0) base.epochs = opts->epochs;
        if (opts->k > 0) base.k = opts->k;

        const Graph g = load_graph(paths->edges, paths->features, paths->labels);
        const auto ratios = parse_double_list(opts->ratios);
        const auto seeds = parse_seed_list(opts->seeds);
        const auto mechanisms = parse_string_list(opts->mechanisms);
        if (ratios.empty() || seeds.empty() || mechanisms.empty()) {
            throw ConfigError("sweep needs nonempty ratios, seeds, and mechanisms");
        }

        std::string csv = "ratio,mechanism,eps_total,delta_total,accuracy,seed\n";
        for (const std::string& mech : mechanisms) {
            if (!is_known_mechanism(mech) || mech == "none") {
                throw ConfigError("sweep: unsupported mechanism '" + mech + "'");
            }
            const bool ratio_free = mech == "features";
            const std::vector<double> mech_ratios =
                ratio_free ? std::vector<double>{0.0} : ratios;
            for (double ratio : mech_ratios) {
                for (std::uint64_t seed : seeds) {
                    RunConfig cfg = base;
                    cfg.mechanism = mech;
                    cfg.ratio_pr = ratio;
                    cfg.seed = seed;
                    const PipelineResult r = run_pipeline(g, cfg);
                    csv += fmt(ratio) + "," + mech + "," + fmt(r.total.epsilon) + "," +
                           fmt(r.total.delta) + "," + fmt(r.test_accuracy) + "," +
                           std::to_string(seed) + "\n";
                    std::cout << "ratio=" << fmt(ratio) << " mechanism=" << mech
                              << " seed=" << seed
                              << " accuracy=" << fmt(r.test_accuracy) << "\n";
                }
            }
        }
        write_text(opts->out, csv);
        std::cout << "wrote " << opts->out << "\n";
    });
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"differentially private decoupled graph learning pipeline"};
    app.require_subcommand(1);
    setup_synth(app);
    setup_prepare(app);
    setup_appr(app);
    setup_train(app);
    setup_eval(app);
    setup_account(app);
    setup_sweep(app);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StageError& e) {
        std::cerr << "stage error (missing or unreadable stage input?): " << e.what()
                  << "\n";
        return kExitStage;
    } catch (const CalibrationError& e) {
        std::cerr << "budget infeasible: " << e.what() << "\n";
        return kExitCalibration;
    } catch (const ParseError& e) {
        std::cerr << "data parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const DimensionError& e) {
        std::cerr << "data consistency error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace dpar::cli
