#include "dpar/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "dpar/errors.hpp"

namespace dpar {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) {
        throw ConfigError("config key '" + key + "': bad number '" + v + "'");
    }
    return x;
}

long to_long(const std::string& key, const std::string& v) {
    long x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
    }
    return x;
}

}  // namespace

bool is_known_mechanism(const std::string& name) {
    return name == "em0" || name == "em1" || name == "gm" || name == "features" ||
           name == "none";
}

void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "epochs") cfg.epochs = static_cast<int>(to_long(key, value));
    else if (key == "lr") cfg.lr = to_double(key, value);
    else if (key == "batch") cfg.batch = static_cast<int>(to_long(key, value));
    else if (key == "hidden") cfg.hidden = static_cast<int>(to_long(key, value));
    else if (key == "alpha") cfg.alpha = to_double(key, value);
    else if (key == "rho") cfg.rho = to_double(key, value);
    else if (key == "gamma") cfg.gamma = to_double(key, value);
    else if (key == "k") cfg.k = static_cast<int>(to_long(key, value));
    else if (key == "train_frac") cfg.train_frac = to_double(key, value);
    else if (key == "q_prime") cfg.q_prime = to_double(key, value);
    else if (key == "m") cfg.m = static_cast<int>(to_long(key, value));
    else if (key == "c1") cfg.c1 = to_double(key, value);
    else if (key == "c2") cfg.c2 = to_double(key, value);
    else if (key == "clip_grad") cfg.clip_grad = to_double(key, value);
    else if (key == "tau") cfg.tau = to_double(key, value);
    else if (key == "power_iters") cfg.power_iters = static_cast<int>(to_long(key, value));
    else if (key == "mechanism") cfg.mechanism = value;
    else if (key == "eps") cfg.eps = to_double(key, value);
    else if (key == "delta") cfg.delta = to_double(key, value);
    else if (key == "ratio_pr") cfg.ratio_pr = to_double(key, value);
    else if (key == "sigma") { cfg.sigma = to_double(key, value); cfg.auto_sigma = false; }
    else if (key == "eps2") cfg.eps2 = to_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(key, value));
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw StageError("cannot open config file '" + path + "'");
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected key=value");
        }
        apply_config_kv(base, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return base;
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (epochs <= 0) fail("epochs must be positive");
    if (lr <= 0.0) fail("lr must be positive");
    if (batch <= 0) fail("batch must be positive");
    if (batch > m) fail("batch must not exceed m");
    if (hidden <= 0) fail("hidden must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0,1)");
    if (rho <= 0.0) fail("rho must be positive");
    if (gamma <= 0.0) fail("gamma must be positive");
    if (k <= 0) fail("k must be positive");
    if (!(train_frac > 0.0 && train_frac <= 1.0)) fail("train_frac must lie in (0,1]");
    if (!(q_prime > 0.0 && q_prime <= 1.0)) fail("q_prime must lie in (0,1]");
    if (m <= 0) fail("m must be positive");
    if (c1 <= 0.0) fail("c1 must be positive");
    if (c2 <= 0.0) fail("c2 must be positive");
    if (clip_grad <= 0.0) fail("clip_grad must be positive");
    if (tau <= 0.0) fail("tau must be positive");
    if (power_iters < 0) fail("power_iters must be >= 0");
    if (!is_known_mechanism(mechanism)) fail("unknown mechanism '" + mechanism + "'");
    if (mechanism != "none") {
        if (eps <= 0.0) fail("eps must be positive");
        if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0,1)");
    }
    if (!(ratio_pr >= 0.0 && ratio_pr <= 1.0)) fail("ratio_pr must lie in [0,1]");
    if (!auto_sigma && sigma < 0.0) fail("sigma must be nonnegative");
    if (eps2 < 0.0) fail("eps2 must be nonnegative");
}

}  // namespace dpar
