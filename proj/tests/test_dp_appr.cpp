#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "dpar/dp_appr.hpp"
#include "dpar/errors.hpp"
#include "dpar/graph.hpp"

using namespace dpar;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ApprVector vec(std::vector<std::pair<int, double>> entries) {
    ApprVector v;
    v.entries = std::move(entries);
    return v;
}

Graph ring_graph(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    Eigen::MatrixXd feats = Eigen::MatrixXd::Zero(n, 1);
    std::vector<int> labels(n, 0);
    return build_graph(n, std::move(edges), std::move(feats), std::move(labels));
}

}  // namespace

TEST_CASE("entrywise clip caps large entries and keeps small ones") {
    const ApprVector v = clip_entrywise(vec({{0, 0.5}, {1, 0.0005}}), 0.001);
    CHECK(v.entries[0].second == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(v.entries[1].second == doctest::Approx(0.0005).epsilon(1e-15));
}

TEST_CASE("entrywise clip is identity below the bound and idempotent") {
    const ApprVector original = vec({{0, 0.3}, {3, 0.7}, {9, 0.1}});
    const ApprVector once = clip_entrywise(original, 0.5);
    const ApprVector twice = clip_entrywise(once, 0.5);
    for (std::size_t i = 0; i < once.entries.size(); ++i) {
        CHECK(once.entries[i].second == twice.entries[i].second);
        CHECK(once.entries[i].second <= 0.5);
    }
    const ApprVector untouched = clip_entrywise(original, 1.0);
    for (std::size_t i = 0; i < original.entries.size(); ++i) {
        CHECK(untouched.entries[i].second == original.entries[i].second);
    }
}

TEST_CASE("l2 clip rescales a 3-4-5 vector onto the unit ball") {
    const ApprVector v = clip_l2(vec({{0, 3.0}, {1, 4.0}}), 1.0);
    CHECK(v.entries[0].second == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(v.entries[1].second == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("l2 clip leaves short vectors and the zero vector alone") {
    const ApprVector small = clip_l2(vec({{0, 0.1}, {1, 0.2}}), 1.0);
    CHECK(small.entries[0].second == 0.1);
    CHECK(small.entries[1].second == 0.2);
    const ApprVector zero = clip_l2(vec({}), 1.0);
    CHECK(zero.entries.empty());
}

TEST_CASE("gumbel_topk with vanishing noise returns the true top-k") {
    Rng rng(1, "em-inf");
    const std::vector<double> utilities{0.1, 0.9, 0.3, 0.7};
    const auto picked = gumbel_topk(utilities, 0.0, 2, rng);
    CHECK(picked == std::vector<int>{1, 3});
}

TEST_CASE("k=1 selection frequencies match the softmax within TV 0.01") {
    // utilities (1,0,0), C2=1, eps=ln2: softmax weights (2,1,1)/4.
    const std::vector<double> utilities{1.0, 0.0, 0.0};
    const double beta = 1.0 / std::log(2.0);
    Rng rng(99, "em-dist");
    const int trials = 100000;
    int counts[3] = {0, 0, 0};
    for (int t = 0; t < trials; ++t) {
        counts[gumbel_topk(utilities, beta, 1, rng)[0]]++;
    }
    const double expected[3] = {0.5, 0.25, 0.25};
    double tv = 0.0;
    for (int j = 0; j < 3; ++j) {
        tv += std::abs(static_cast<double>(counts[j]) / trials - expected[j]);
    }
    CHECK(tv / 2.0 <= 0.01);
}

TEST_CASE("em mechanism with infinite budget recovers the true top-k support") {
    const Graph g = ring_graph(12);
    const std::vector<int> v_m{0, 5};
    EmConfig cfg;
    cfg.eps = kInf;
    cfg.delta = 1e-5;
    cfg.clip = 1.0;  // no entries clipped, ordering preserved
    cfg.k = 3;
    const NoiseRng noise{7, 0};
    const ApprMatrix m = dp_appr_em(g, v_m, ApprParams{}, cfg, noise);
    const ApprVector exact = solve_appr_ista(g, 0, ApprParams{});
    std::vector<std::pair<int, double>> ranked = exact.entries;
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::set<int> expected;
    for (int i = 0; i < 3; ++i) expected.insert(ranked[i].first);
    std::set<int> got;
    for (const auto& [idx, w] : m.rows[0].entries) got.insert(idx);
    CHECK(got == expected);
}

TEST_CASE("option I rows carry exactly k entries of 1/k") {
    const Graph g = ring_graph(10);
    const std::vector<int> v_m{0, 3, 7};
    EmConfig cfg;
    cfg.eps = 0.5;
    cfg.delta = 1e-5;
    cfg.clip = 0.001;
    cfg.k = 2;
    const NoiseRng noise{11, 0};
    const ApprMatrix m = dp_appr_em(g, v_m, ApprParams{}, cfg, noise);
    for (const auto& row : m.rows) {
        REQUIRE(row.entries.size() == 2);
        double sum = 0.0;
        for (const auto& [idx, w] : row.entries) {
            CHECK(w == 0.5);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(m.mechanism == "em0");
    CHECK(m.spent.delta == doctest::Approx(2.0 * 3 * cfg.delta).epsilon(1e-15));
}

TEST_CASE("option II values are clipped values plus laplace noise, floored at zero") {
    const Graph g = ring_graph(10);
    const std::vector<int> v_m{0, 1, 2, 3, 4, 5};
    EmConfig cfg;
    cfg.eps = 0.5;
    cfg.eps_values = 0.4;
    cfg.delta = 1e-5;
    cfg.clip = 0.001;
    cfg.k = 2;
    cfg.option = EmOption::kNoisyValues;
    const NoiseRng noise{13, 0};
    const ApprMatrix m = dp_appr_em(g, v_m, ApprParams{}, cfg, noise);
    CHECK(m.mechanism == "em1");
    bool any_positive = false;
    for (const auto& row : m.rows) {
        CHECK(row.entries.size() == 2);
        for (const auto& [idx, w] : row.entries) {
            CHECK(w >= 0.0);
            any_positive = any_positive || w > 0.0;
        }
    }
    CHECK(any_positive);
    // Wider value budget than option I alone.
    const PrivacyBudget opt1 = accounting::em_matrix_budget(0.5, 0.0, 2, 1e-5, 6);
    CHECK(m.spent.epsilon > opt1.epsilon);
}

TEST_CASE("gm sigma closed form and top-k behavior in the noiseless limit") {
    GmConfig cfg;
    cfg.eps = 1.0;
    cfg.delta = 1e-5;
    cfg.clip = 0.01;
    CHECK(std::abs(cfg.sigma() - std::sqrt(2.0 * std::log(1.25e5)) * 0.01) <= 1e-12);

    const Graph g = ring_graph(12);
    const std::vector<int> v_m{0};
    GmConfig quiet;
    quiet.eps = kInf;  // noiseless limit
    quiet.delta = 1e-5;
    quiet.clip = 1.0;
    quiet.k = 3;
    const NoiseRng noise{5, 0};
    const ApprMatrix m = dp_appr_gm(g, v_m, ApprParams{}, quiet, noise);
    const ApprVector clipped = clip_l2(solve_appr_ista(g, 0, ApprParams{}), 1.0);
    std::vector<std::pair<int, double>> ranked = clipped.entries;
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    REQUIRE(m.rows[0].entries.size() == 3);
    for (const auto& [idx, w] : m.rows[0].entries) {
        CHECK(w == doctest::Approx(clipped.value_at(idx)).epsilon(1e-12));
    }
}

TEST_CASE("gm rows always have min(k, n) nonzero slots and values >= 0") {
    const Graph g = ring_graph(8);
    const std::vector<int> v_m{0, 4};
    GmConfig cfg;
    cfg.eps = 0.7;
    cfg.delta = 1e-6;
    cfg.clip = 0.01;
    cfg.k = 5;
    const NoiseRng noise{17, 0};
    const ApprMatrix m = dp_appr_gm(g, v_m, ApprParams{}, cfg, noise);
    for (const auto& row : m.rows) {
        CHECK(row.entries.size() == 5);
        for (const auto& [idx, w] : row.entries) CHECK(w >= 0.0);
    }
}

TEST_CASE("k larger than the candidate set is a configuration error") {
    const Graph g = ring_graph(4);
    EmConfig em;
    em.eps = 1.0;
    em.delta = 1e-5;
    em.k = 5;
    GmConfig gm;
    gm.eps = 1.0;
    gm.delta = 1e-5;
    gm.k = 5;
    const NoiseRng noise{1, 0};
    CHECK_THROWS_AS(dp_appr_em(g, {0}, ApprParams{}, em, noise), ConfigError);
    CHECK_THROWS_AS(dp_appr_gm(g, {0}, ApprParams{}, gm, noise), ConfigError);
}

TEST_CASE("clip bounds hold at the mechanism boundary (instrumentation hook)") {
    const Graph g = ring_graph(16);
    const std::vector<int> v_m{0, 2, 4, 6};
    int observed = 0;

    EmConfig em;
    em.eps = 0.3;
    em.delta = 1e-5;
    em.clip = 0.001;
    const NoiseRng noise{23, 0};
    dp_appr_em(g, v_m, ApprParams{}, em, noise,
               [&](int, const ApprVector& clipped) {
                   ++observed;
                   for (const auto& [idx, w] : clipped.entries) {
                       CHECK(w <= 0.001 + 1e-18);
                       CHECK(w >= 0.0);
                   }
               });
    CHECK(observed == 4);

    observed = 0;
    GmConfig gm;
    gm.eps = 0.3;
    gm.delta = 1e-5;
    gm.clip = 0.01;
    dp_appr_gm(g, v_m, ApprParams{}, gm, noise,
               [&](int, const ApprVector& clipped) {
                   ++observed;
                   double sq = 0.0;
                   for (const auto& [idx, w] : clipped.entries) sq += w * w;
                   CHECK(std::sqrt(sq) <= 0.01 + 1e-15);
               });
    CHECK(observed == 4);
}

TEST_CASE("noise is dense: selections reach far outside the solver support") {
    // With beta >> clip the selection is noise-driven; on a long ring the
    // solver support of node 0 is local, so distant indices must appear.
    const Graph g = ring_graph(64);
    std::vector<int> v_m;
    for (int i = 0; i < 16; ++i) v_m.push_back(i);
    EmConfig cfg;
    cfg.eps = 1e-4;  // beta = clip/eps = 10: noise dominates utilities
    cfg.delta = 1e-5;
    cfg.clip = 0.001;
    cfg.k = 2;
    const NoiseRng noise{29, 0};
    const ApprMatrix m = dp_appr_em(g, v_m, ApprParams{}, cfg, noise);
    bool far_selection = false;
    for (const auto& row : m.rows) {
        for (const auto& [idx, w] : row.entries) {
            const int dist = std::min(std::abs(idx - row.source),
                                      64 - std::abs(idx - row.source));
            far_selection = far_selection || dist > 10;
        }
    }
    CHECK(far_selection);
}

TEST_CASE("same seed replays the identical matrix") {
    const Graph g = ring_graph(20);
    const std::vector<int> v_m{0, 5, 10, 15};
    GmConfig cfg;
    cfg.eps = 0.4;
    cfg.delta = 1e-6;
    cfg.clip = 0.01;
    cfg.k = 3;
    const NoiseRng noise{31, 100};
    const ApprMatrix a = dp_appr_gm(g, v_m, ApprParams{}, cfg, noise);
    const ApprMatrix b = dp_appr_gm(g, v_m, ApprParams{}, cfg, noise);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        REQUIRE(a.rows[i].entries.size() == b.rows[i].entries.size());
        for (std::size_t j = 0; j < a.rows[i].entries.size(); ++j) {
            CHECK(a.rows[i].entries[j].first == b.rows[i].entries[j].first);
            CHECK(a.rows[i].entries[j].second == b.rows[i].entries[j].second);
        }
    }
}

TEST_CASE("matrix serialization round-trips bit-exactly") {
    const Graph g = ring_graph(20);
    const std::vector<int> v_m{0, 7, 14};
    GmConfig cfg;
    cfg.eps = 0.9;
    cfg.delta = 1e-6;
    cfg.clip = 0.01;
    cfg.k = 4;
    const NoiseRng noise{37, 0};
    ApprMatrix m = dp_appr_gm(g, v_m, ApprParams{}, cfg, noise);
    m.seed = 37;
    const auto path = (std::filesystem::temp_directory_path() / "appr_rt.txt").string();
    save_appr_matrix(m, path);
    const ApprMatrix r = load_appr_matrix(path);
    CHECK(r.n_cols == m.n_cols);
    CHECK(r.k == m.k);
    CHECK(r.mechanism == m.mechanism);
    CHECK(r.seed == m.seed);
    CHECK(r.spent.epsilon == m.spent.epsilon);
    CHECK(r.spent.delta == m.spent.delta);
    REQUIRE(r.rows.size() == m.rows.size());
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        CHECK(r.rows[i].source == m.rows[i].source);
        REQUIRE(r.rows[i].entries.size() == m.rows[i].entries.size());
        for (std::size_t j = 0; j < m.rows[i].entries.size(); ++j) {
            CHECK(r.rows[i].entries[j].first == m.rows[i].entries[j].first);
            CHECK(r.rows[i].entries[j].second == m.rows[i].entries[j].second);
        }
    }
}

TEST_CASE("identity rows and true top-k rows") {
    const Graph g = ring_graph(10);
    const ApprMatrix f = feature_identity_rows({2, 5}, 10);
    CHECK(f.mechanism == "features");
    CHECK(f.spent.epsilon == 0.0);
    REQUIRE(f.rows.size() == 2);
    CHECK(f.rows[0].entries == std::vector<std::pair<int, double>>{{2, 1.0}});
    CHECK(f.rows[1].entries == std::vector<std::pair<int, double>>{{5, 1.0}});

    const ApprMatrix t = topk_appr(g, {0}, ApprParams{}, 3);
    CHECK(t.mechanism == "none");
    CHECK(std::isinf(t.spent.epsilon));
    CHECK(t.rows[0].entries.size() == 3);
    const ApprVector exact = solve_appr_ista(g, 0, ApprParams{});
    for (const auto& [idx, w] : t.rows[0].entries) {
        CHECK(w == exact.value_at(idx));
    }
}
