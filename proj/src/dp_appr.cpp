#include "dpar/dp_appr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dpar/errors.hpp"

namespace dpar {

namespace {

void validate_vm(const Graph& g, const std::vector<int>& v_m) {
    if (v_m.empty()) throw ConfigError("v_m must be nonempty");
    for (int v : v_m) {
        if (v < 0 || v >= g.n_nodes) throw DimensionError("v_m entry out of range");
    }
}

std::vector<std::pair<int, double>> sorted_entries(std::vector<std::pair<int, double>> e) {
    std::sort(e.begin(), e.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return e;
}

}  // namespace

double ApprMatrix::max_column_l1() const {
    std::vector<double> col(n_cols, 0.0);
    for (const auto& row : rows) {
        for (const auto& [idx, w] : row.entries) col[idx] += std::abs(w);
    }
    double best = 0.0;
    for (double v : col) best = std::max(best, v);
    return best;
}

ApprVector clip_entrywise(ApprVector v, double bound) {
    if (bound <= 0.0) throw ConfigError("entrywise clip bound must be positive");
    for (auto& [idx, w] : v.entries) {
        w /= std::max(1.0, std::abs(w) / bound);
    }
    return v;
}

ApprVector clip_l2(ApprVector v, double bound) {
    if (bound <= 0.0) throw ConfigError("l2 clip bound must be positive");
    double sq = 0.0;
    for (const auto& [idx, w] : v.entries) sq += w * w;
    const double norm = std::sqrt(sq);
    const double scale = 1.0 / std::max(1.0, norm / bound);
    if (scale < 1.0) {
        for (auto& [idx, w] : v.entries) w *= scale;
    }
    return v;
}

std::vector<int> gumbel_topk(std::span<const double> utilities, double beta, int k,
                             Rng& rng) {
    const int n = static_cast<int>(utilities.size());
    if (k > n) throw ConfigError("top-k size exceeds candidate count");
    std::vector<double> noisy(n);
    for (int j = 0; j < n; ++j) noisy[j] = utilities[j] + rng.gumbel(beta);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        if (noisy[a] != noisy[b]) return noisy[a] > noisy[b];
        return a < b;  // deterministic tie-break
    });
    std::vector<int> picked(order.begin(), order.begin() + k);
    std::sort(picked.begin(), picked.end());
    return picked;
}

namespace {

// Shared mechanism skeleton: per-row APPR -> clip -> dense noise -> top-k.
template <typename ClipFn, typename NoiseFn, typename ValueFn>
ApprMatrix run_mechanism(const Graph& g, const std::vector<int>& v_m,
                         const ApprParams& params, int k, const NoiseRng& noise,
                         const RowObserver& observe, ClipFn clip, NoiseFn add_noise,
                         ValueFn retained_value) {
    validate_vm(g, v_m);
    if (k < 1) throw ConfigError("k must be >= 1");
    if (k > g.n_nodes) throw ConfigError("k exceeds the number of candidate nodes");

    ApprMatrix out;
    out.n_cols = g.n_nodes;
    out.k = k;
    out.seed = noise.seed;
    out.rows.reserve(v_m.size());

    std::vector<double> utilities(g.n_nodes);
    for (std::size_t i = 0; i < v_m.size(); ++i) {
        const ApprVector raw = solve_appr_ista(g, v_m[i], params);
        const ApprVector clipped = clip(raw);
        if (observe) observe(static_cast<int>(i), clipped);

        std::fill(utilities.begin(), utilities.end(), 0.0);
        for (const auto& [idx, w] : clipped.entries) utilities[idx] = w;

        Rng rng = noise.row_rng(static_cast<int>(i));
        std::vector<double> noisy(utilities);
        for (double& u : noisy) u = add_noise(u, rng);

        std::vector<int> order(g.n_nodes);
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [&](int a, int b) {
                              if (noisy[a] != noisy[b]) return noisy[a] > noisy[b];
                              return a < b;
                          });
        std::vector<int> picked(order.begin(), order.begin() + k);
        std::sort(picked.begin(), picked.end());

        ApprVector row;
        row.source = v_m[i];
        row.teleport_only = raw.teleport_only;
        row.converged = raw.converged;
        row.entries.reserve(picked.size());
        for (int idx : picked) {
            row.entries.emplace_back(idx, retained_value(idx, utilities[idx], noisy[idx], rng));
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace

ApprMatrix dp_appr_em(const Graph& g, const std::vector<int>& v_m,
                      const ApprParams& params, const EmConfig& cfg,
                      const NoiseRng& noise, const RowObserver& observe) {
    if (cfg.eps <= 0.0) throw ConfigError("em eps must be positive");
    if (cfg.delta <= 0.0 || cfg.delta > 1.0) throw ConfigError("em delta must lie in (0,1]");
    if (cfg.clip <= 0.0) throw ConfigError("em clip bound must be positive");
    const bool noisy_values = cfg.option == EmOption::kNoisyValues;
    if (noisy_values && cfg.eps_values <= 0.0) {
        throw ConfigError("option II requires a positive value budget");
    }

    const double beta = std::isinf(cfg.eps) ? 0.0 : cfg.clip / cfg.eps;
    const double lap_scale = noisy_values ? cfg.k * cfg.clip / cfg.eps_values : 0.0;
    const double uniform_value = 1.0 / cfg.k;

    ApprMatrix out = run_mechanism(
        g, v_m, params, cfg.k, noise, observe,
        [&](const ApprVector& raw) { return clip_entrywise(raw, cfg.clip); },
        [&](double u, Rng& rng) { return u + rng.gumbel(beta); },
        [&](int /*idx*/, double clipped_value, double /*noisy*/, Rng& rng) {
            if (!noisy_values) return uniform_value;
            return std::max(0.0, clipped_value + rng.laplace(lap_scale));
        });
    out.mechanism = noisy_values ? "em1" : "em0";
    out.spent = em_matrix_budget(cfg, static_cast<int>(v_m.size()));
    return out;
}

ApprMatrix dp_appr_gm(const Graph& g, const std::vector<int>& v_m,
                      const ApprParams& params, const GmConfig& cfg,
                      const NoiseRng& noise, const RowObserver& observe) {
    if (cfg.eps <= 0.0) throw ConfigError("gm eps must be positive");
    if (cfg.delta <= 0.0 || cfg.delta >= 1.0) throw ConfigError("gm delta must lie in (0,1)");
    if (cfg.clip <= 0.0) throw ConfigError("gm clip bound must be positive");

    const double sigma = std::isinf(cfg.eps) ? 0.0 : cfg.sigma();
    ApprMatrix out = run_mechanism(
        g, v_m, params, cfg.k, noise, observe,
        [&](const ApprVector& raw) { return clip_l2(raw, cfg.clip); },
        [&](double u, Rng& rng) { return sigma > 0.0 ? u + rng.gaussian(sigma) : u; },
        [&](int /*idx*/, double /*clipped*/, double noisy_value, Rng& /*rng*/) {
            return std::max(0.0, noisy_value);  // keep aggregation weights nonnegative
        });
    out.mechanism = "gm";
    out.spent = gm_matrix_budget(cfg, static_cast<int>(v_m.size()));
    return out;
}

ApprMatrix topk_appr(const Graph& g, const std::vector<int>& v_m,
                     const ApprParams& params, int k) {
    validate_vm(g, v_m);
    if (k < 1 || k > g.n_nodes) throw ConfigError("k must lie in [1, n_nodes]");
    ApprMatrix out;
    out.n_cols = g.n_nodes;
    out.k = k;
    out.mechanism = "none";
    out.spent = {std::numeric_limits<double>::infinity(), 0.0};
    for (int v : v_m) {
        ApprVector raw = solve_appr_ista(g, v, params);
        std::vector<std::pair<int, double>> entries = raw.entries;
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (static_cast<int>(entries.size()) > k) entries.resize(k);
        ApprVector row;
        row.source = v;
        row.teleport_only = raw.teleport_only;
        row.converged = raw.converged;
        row.entries = sorted_entries(std::move(entries));
        out.rows.push_back(std::move(row));
    }
    return out;
}

ApprMatrix feature_identity_rows(const std::vector<int>& v_m, int n_cols) {
    ApprMatrix out;
    out.n_cols = n_cols;
    out.k = 1;
    out.mechanism = "features";
    out.spent = {0.0, 0.0};
    for (int v : v_m) {
        if (v < 0 || v >= n_cols) throw DimensionError("v_m entry out of range");
        ApprVector row;
        row.source = v;
        row.entries = {{v, 1.0}};
        out.rows.push_back(std::move(row));
    }
    return out;
}

void save_appr_matrix(const ApprMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw StageError("cannot open '" + path + "' for writing");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", m.spent.epsilon, m.spent.delta);
    out << m.rows.size() << ' ' << m.n_cols << ' ' << m.k << ' ' << m.mechanism << ' '
        << buf << ' ' << m.seed << '\n';
    for (const auto& row : m.rows) {
        out << row.source;
        for (const auto& [idx, w] : row.entries) {
            std::snprintf(buf, sizeof(buf), " %d:%.17g", idx, w);
            out << buf;
        }
        out << '\n';
    }
}

ApprMatrix load_appr_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StageError("cannot open '" + path + "' for reading");
    ApprMatrix m;
    std::size_t n_rows = 0;
    std::string eps_tok, delta_tok;
    in >> n_rows >> m.n_cols >> m.k >> m.mechanism >> eps_tok >> delta_tok >> m.seed;
    if (!in) throw ParseError(path + ": bad matrix header");
    // strtod accepts "inf", which stream extraction of doubles does not.
    m.spent.epsilon = std::strtod(eps_tok.c_str(), nullptr);
    m.spent.delta = std::strtod(delta_tok.c_str(), nullptr);
    std::string line;
    std::getline(in, line);  // finish header line
    m.rows.reserve(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        if (!std::getline(in, line)) throw ParseError(path + ": truncated matrix body");
        std::istringstream ss(line);
        ApprVector row;
        if (!(ss >> row.source)) throw ParseError(path + ": bad row source id");
        std::string pair;
        while (ss >> pair) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos) throw ParseError(path + ": bad index:value pair");
            const int idx = std::stoi(pair.substr(0, colon));
            char* end = nullptr;
            const std::string value_str = pair.substr(colon + 1);
            const double w = std::strtod(value_str.c_str(), &end);
            if (end != value_str.c_str() + value_str.size()) {
                throw ParseError(path + ": bad value '" + value_str + "'");
            }
            row.entries.emplace_back(idx, w);
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

}  // namespace dpar
