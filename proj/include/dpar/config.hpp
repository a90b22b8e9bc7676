#pragma once

#include <cstdint>
#include <string>

namespace dpar {

// Single configuration surface for the whole pipeline. Key names in config
// files equal the field names; precedence is flags > file > defaults.
struct RunConfig {
    // training
    int epochs = 200;
    double lr = 0.005;
    int batch = 60;
    int hidden = 32;
    // appr solver
    double alpha = 0.25;
    double rho = 1e-4;
    double gamma = 1e-4;
    int k = 2;
    // split
    double train_frac = 0.8;
    double q_prime = 0.09;
    int m = 70;
    // clipping
    double c1 = 0.01;      // gm row l2 bound
    double c2 = 0.001;     // em entry bound
    double clip_grad = 1.0;
    double tau = 1.0;      // column l1 bound
    // inference
    int power_iters = 2;
    // privacy
    std::string mechanism = "em0";  // em0 | em1 | gm | features | none
    double eps = 1.0;               // total budget epsilon
    double delta = 2e-3;            // total budget delta
    double ratio_pr = 0.5;          // share of the total epsilon for the matrix stage
    double sigma = 0.0;             // explicit noise multiplier; <0 or unset = calibrate
    bool auto_sigma = true;
    double eps2 = 0.0;              // em1 value budget; 0 = derive (half the row cost)
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError on the first violated invariant
};

// key=value lines, '#' comments. Unknown keys are errors.
RunConfig load_config_file(const std::string& path, RunConfig base);
void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value);

bool is_known_mechanism(const std::string& name);

}  // namespace dpar
