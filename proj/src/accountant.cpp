#include "dpar/accountant.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dpar/errors.hpp"

namespace dpar::accounting {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("accounting: ") + what);
}

}  // namespace

double em_topk_cost(double eps, int k, double delta) {
    require(eps > 0.0, "eps must be positive");
    require(k >= 1, "k must be >= 1");
    require(delta > 0.0 && delta <= 1.0, "delta must lie in (0,1]");
    if (std::isinf(eps)) return std::numeric_limits<double>::infinity();
    const double ke = k * eps;
    const double branch_a = ke;
    const double branch_b =
        ke * (std::exp(2.0 * eps) - 1.0) / (std::exp(2.0 * eps) + 1.0) +
        eps * std::sqrt(2.0 * k * std::log(1.0 / delta));
    return 2.0 * std::min(branch_a, branch_b);
}

double em_eps_from_cost(double target_cost, int k, double delta) {
    require(target_cost > 0.0, "target cost must be positive");
    double lo = 0.0;
    double hi = 1.0;
    while (em_topk_cost(hi, k, delta) < target_cost) {
        hi *= 2.0;
        if (hi > 1e12) throw CalibrationError("em_eps_from_cost: target out of range");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (em_topk_cost(mid, k, delta) < target_cost) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

namespace {

// per-step eps as a function of the composed eps_g; monotone increasing.
double compose_forward(double eps_g, int m, double delta_g) {
    return eps_g / (2.0 * std::sqrt(m * std::log(std::numbers::e + eps_g / delta_g)));
}

}  // namespace

PrivacyBudget optimal_compose(double per_step_eps, int m, double delta) {
    require(per_step_eps > 0.0, "per-step eps must be positive");
    require(m >= 1, "m must be >= 1");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
    require(2.0 * m * delta < 1.0, "composed delta 2*m*delta must stay below 1");
    if (std::isinf(per_step_eps)) {
        return {std::numeric_limits<double>::infinity(), 2.0 * m * delta};
    }
    const double delta_g = 2.0 * m * delta;
    double lo = 0.0;
    double hi = 1.0;
    while (compose_forward(hi, m, delta_g) < per_step_eps) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw CalibrationError("optimal_compose: no finite solution");
    }
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (compose_forward(mid, m, delta_g) < per_step_eps) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {hi, delta_g};
}

double optimal_decompose(PrivacyBudget total, int m) {
    require(total.epsilon > 0.0, "total epsilon must be positive");
    require(total.delta > 0.0 && total.delta < 1.0, "total delta must lie in (0,1)");
    require(m >= 1, "m must be >= 1");
    return compose_forward(total.epsilon, m, total.delta);
}

PrivacyBudget em_matrix_budget(double eps, double eps_values, int k, double delta, int m) {
    require(eps_values >= 0.0, "eps_values must be nonnegative");
    const double per_row = em_topk_cost(eps, k, delta) + eps_values;
    return optimal_compose(per_row, m, delta);
}

PrivacyBudget gm_matrix_budget(double eps, double delta, int m) {
    return optimal_compose(eps, m, delta);
}

double gaussian_sigma(double eps, double delta, double c) {
    require(eps > 0.0, "eps must be positive");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
    require(c > 0.0, "sensitivity must be positive");
    return std::sqrt(2.0 * std::log(1.25 / delta)) * c / eps;
}

SgdEpsilonDetail sgd_epsilon_detail(const SgdAccountParams& p) {
    require(p.q > 0.0 && p.q <= 1.0, "q must lie in (0,1]");
    require(p.tau > 0.0, "tau must be positive");
    require(p.sigma >= 0.0, "sigma must be nonnegative");
    require(p.steps >= 0, "steps must be nonnegative");
    require(p.delta > 0.0 && p.delta < 1.0, "delta must lie in (0,1)");
    if (p.sigma == 0.0 && p.steps > 0) {
        return {std::numeric_limits<double>::infinity(), 0, false};
    }

    const double log_inv_delta = std::log(1.0 / p.delta);
    const double moment_scale =
        p.steps == 0 ? 0.0
                     : static_cast<double>(p.steps) * p.q * p.q * p.tau * p.tau /
                           (p.sigma * p.sigma);
    SgdEpsilonDetail best{std::numeric_limits<double>::infinity(), 0, false};
    for (int lambda = 1; lambda <= kLambdaMax; ++lambda) {
        const double alpha = moment_scale * lambda * (lambda + 1.0);
        const double eps = (alpha + log_inv_delta) / lambda;
        if (eps < best.epsilon) {
            best.epsilon = eps;
            best.lambda = lambda;
        }
    }
    best.lambda_cap_hit = best.lambda == kLambdaMax;
    return best;
}

double sgd_epsilon(const SgdAccountParams& p) { return sgd_epsilon_detail(p).epsilon; }

double calibrate_sigma(double target_eps, double q, double tau, long steps, double delta) {
    require(target_eps > 0.0, "target eps must be positive");
    SgdAccountParams p{q, tau, 0.0, steps, delta};
    if (steps == 0) {
        p.sigma = 0.0;
        return 0.0;
    }

    constexpr double kSigmaCap = 1e6;
    double lo = 0.0;  // infeasible side (sigma == 0 gives infinite eps)
    double hi = 1e-6;
    p.sigma = hi;
    while (sgd_epsilon(p) > target_eps) {
        lo = hi;
        hi *= 2.0;
        if (hi > kSigmaCap) {
            throw CalibrationError("calibrate_sigma: target eps " + std::to_string(target_eps) +
                                   " unreachable with sigma <= 1e6");
        }
        p.sigma = hi;
    }
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        p.sigma = mid;
        if (sgd_epsilon(p) > target_eps) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

PrivacyBudget total_budget(double eps_pr, double delta_pr, double eps_sgd,
                           double delta_sgd, double q_prime) {
    require(q_prime > 0.0 && q_prime <= 1.0, "q_prime must lie in (0,1]");
    return {q_prime * (eps_pr + eps_sgd), delta_pr + delta_sgd};
}

std::pair<PrivacyBudget, PrivacyBudget> split_budget(PrivacyBudget total,
                                                     double ratio_pr, double q_prime) {
    require(ratio_pr >= 0.0 && ratio_pr <= 1.0, "ratio_pr must lie in [0,1]");
    require(q_prime > 0.0 && q_prime <= 1.0, "q_prime must lie in (0,1]");
    PrivacyBudget pr{ratio_pr * total.epsilon / q_prime, 0.5 * total.delta};
    PrivacyBudget sgd{(1.0 - ratio_pr) * total.epsilon / q_prime, 0.5 * total.delta};
    return {pr, sgd};
}

}  // namespace dpar::accounting
