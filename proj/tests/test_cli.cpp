#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dpar/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dpar_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
    static int counter;
};
int TempDir::counter = 0;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Captures stdout produced by one cli invocation.
int run_captured(const std::vector<std::string>& args, std::string* out) {
    std::stringstream buffer;
    std::streambuf* old = std::cout.rdbuf(buffer.rdbuf());
    const int rc = dpar::cli::run(args);
    std::cout.rdbuf(old);
    if (out) *out = buffer.str();
    return rc;
}

}  // namespace

TEST_CASE("stage chain produces identical metrics across two runs") {
    TempDir dir;
    const std::string data = dir / "data";
    REQUIRE(dpar::cli::run({"synth", "--nodes", "120", "--communities", "3", "--p-in",
                            "0.15", "--p-out", "0.01", "--dim", "8", "--noise", "0.4",
                            "--seed", "9", "--out", data}) == 0);
    const std::vector<std::string> graph_flags{
        "--edges", data + "/edges.tsv", "--features", data + "/features.csv",
        "--labels", data + "/labels.txt"};

    auto chain = [&](const std::string& tag) {
        std::vector<std::string> prepare{"prepare", "--train-frac", "0.8",
                                         "--sample-rate", "1.0", "--m", "15", "--seed",
                                         "9", "--out", dir / ("split" + tag)};
        prepare.insert(prepare.end(), graph_flags.begin(), graph_flags.end());
        REQUIRE(dpar::cli::run(prepare) == 0);

        std::vector<std::string> appr{"appr", "--split", dir / ("split" + tag),
                                      "--mechanism", "gm", "--eps", "0.5", "--delta",
                                      "1e-5", "--k", "2", "--seed", "9", "--out",
                                      dir / ("appr" + tag)};
        appr.insert(appr.end(), graph_flags.begin(), graph_flags.end());
        REQUIRE(dpar::cli::run(appr) == 0);

        std::vector<std::string> train{"train", "--split", dir / ("split" + tag),
                                       "--appr", dir / ("appr" + tag), "--sigma", "2.0",
                                       "--delta", "1e-5", "--batch", "5", "--epochs", "5",
                                       "--hidden", "8", "--seed", "9", "--out",
                                       dir / ("model" + tag)};
        train.insert(train.end(), graph_flags.begin(), graph_flags.end());
        REQUIRE(dpar::cli::run(train) == 0);

        std::vector<std::string> eval{"eval", "--split", dir / ("split" + tag), "--appr",
                                      dir / ("appr" + tag), "--model", dir / ("model" + tag),
                                      "--out", dir / ("metrics" + tag)};
        eval.insert(eval.end(), graph_flags.begin(), graph_flags.end());
        REQUIRE(dpar::cli::run(eval) == 0);
        return slurp(dir / ("metrics" + tag));
    };

    const std::string first = chain("_a");
    const std::string second = chain("_b");
    CHECK(first == second);
    CHECK(first.find("test_accuracy=") != std::string::npos);
    CHECK(first.find("eps_total=") != std::string::npos);
    CHECK(first.find("delta_total=") != std::string::npos);
}

TEST_CASE("account reports the gm noise scale") {
    std::string out;
    const int rc = run_captured({"account", "--mechanism", "gm", "--eps", "1", "--delta",
                                 "1e-05", "--c1", "0.01", "--m", "1"},
                                &out);
    CHECK(rc == 0);
    // sqrt(2 ln(1.25e5)) * 0.01
    CHECK(out.find("gm_sigma=0.048448052626053") != std::string::npos);
    CHECK(out.find("eps_pr=") != std::string::npos);
    CHECK(out.find("composition=optimal_strong_composition") != std::string::npos);
}

TEST_CASE("account covers the sgd stage with warnings") {
    std::string out;
    const int rc = run_captured(
        {"account", "--mechanism", "em0", "--eps", "0.1", "--delta", "1e-05", "--m",
         "70", "--sigma", "4.0", "--tau", "1.0", "--q-batch", "0.25", "--steps", "400",
         "--delta-sgd", "1e-3", "--q-prime", "0.5"},
        &out);
    CHECK(rc == 0);
    CHECK(out.find("em_row_cost=") != std::string::npos);
    CHECK(out.find("eps_sgd=") != std::string::npos);
    CHECK(out.find("warning_sigma_exceeds_tau=1") != std::string::npos);
    CHECK(out.find("eps_total=") != std::string::npos);
}

TEST_CASE("missing stage inputs exit with the stage code") {
    TempDir dir;
    const std::string data = dir / "data";
    REQUIRE(dpar::cli::run({"synth", "--nodes", "60", "--communities", "2", "--out",
                            data}) == 0);
    std::string out;
    const int rc = run_captured(
        {"appr", "--edges", data + "/edges.tsv", "--features", data + "/features.csv",
         "--labels", data + "/labels.txt", "--split", dir / "missing_split.txt",
         "--mechanism", "none", "--out", dir / "appr.txt"},
        &out);
    CHECK(rc == dpar::cli::kExitStage);
}

TEST_CASE("invalid configuration exits with the config code") {
    TempDir dir;
    const std::string data = dir / "data";
    REQUIRE(dpar::cli::run({"synth", "--nodes", "60", "--communities", "2", "--out",
                            data}) == 0);
    // M larger than the node count cannot be satisfied.
    std::string out;
    const int rc = run_captured(
        {"prepare", "--edges", data + "/edges.tsv", "--features", data + "/features.csv",
         "--labels", data + "/labels.txt", "--m", "1000", "--sample-rate", "1.0",
         "--out", dir / "split.txt"},
        &out);
    CHECK(rc == dpar::cli::kExitConfig);
}

TEST_CASE("infeasible budget targets exit with the calibration code") {
    TempDir dir;
    const std::string data = dir / "data";
    REQUIRE(dpar::cli::run({"synth", "--nodes", "100", "--communities", "2", "--out",
                            data}) == 0);
    const std::vector<std::string> graph_flags{
        "--edges", data + "/edges.tsv", "--features", data + "/features.csv",
        "--labels", data + "/labels.txt"};
    std::vector<std::string> prepare{"prepare", "--sample-rate", "1.0", "--m", "10",
                                     "--seed", "3", "--out", dir / "split.txt"};
    prepare.insert(prepare.end(), graph_flags.begin(), graph_flags.end());
    REQUIRE(dpar::cli::run(prepare) == 0);
    std::vector<std::string> appr{"appr", "--split", dir / "split.txt", "--mechanism",
                                  "none", "--out", dir / "appr.txt"};
    appr.insert(appr.end(), graph_flags.begin(), graph_flags.end());
    REQUIRE(dpar::cli::run(appr) == 0);

    // Target epsilon below the sigma->infinity floor of the moments bound.
    std::vector<std::string> train{"train", "--split", dir / "split.txt", "--appr",
                                   dir / "appr.txt", "--eps", "1e-9", "--delta", "1e-3",
                                   "--batch", "5", "--epochs", "2", "--out",
                                   dir / "model.txt"};
    train.insert(train.end(), graph_flags.begin(), graph_flags.end());
    std::string out;
    CHECK(run_captured(train, &out) == dpar::cli::kExitCalibration);
}

TEST_CASE("sweep emits the pinned CSV header and one row per cell") {
    TempDir dir;
    const std::string data = dir / "data";
    REQUIRE(dpar::cli::run({"synth", "--nodes", "120", "--communities", "3", "--dim",
                            "8", "--seed", "4", "--out", data}) == 0);
    std::vector<std::string> sweep{
        "sweep",  "--total-eps", "6",           "--total-delta", "1e-3",
        "--ratios", "0.3,0.7",   "--seeds",     "1,2",           "--mechanisms",
        "gm,features", "--q-prime", "1.0",      "--m",           "10",
        "--batch", "5",          "--epochs",    "3",             "--out",
        dir / "sweep.csv"};
    sweep.insert(sweep.end(), {"--edges", data + "/edges.tsv", "--features",
                               data + "/features.csv", "--labels", data + "/labels.txt"});
    std::string out;
    REQUIRE(run_captured(sweep, &out) == 0);
    const std::string csv = slurp(dir / "sweep.csv");
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "ratio,mechanism,eps_total,delta_total,accuracy,seed");
    int rows = 0;
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 2 * 2 + 1 * 2);  // gm: 2 ratios x 2 seeds, features: 1 x 2
}

TEST_CASE("unknown subcommands fail") {
    std::string out;
    CHECK(run_captured({"frobnicate"}, &out) != 0);
}
