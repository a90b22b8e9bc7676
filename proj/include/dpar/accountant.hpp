#pragma once

#include <utility>

namespace dpar {

struct PrivacyBudget {
    double epsilon = 0.0;
    double delta = 0.0;
};

// Inputs for the DP-SGD moments bound.
struct SgdAccountParams {
    double q = 0.0;      // batch sampling ratio B/N
    double tau = 0.0;    // column l1 clip bound of the aggregation matrix
    double sigma = 0.0;  // noise multiplier relative to the gradient clip
    long steps = 0;      // T
    double delta = 0.0;  // target delta
};

namespace accounting {

// The moment order search is capped; sufficient for q >= 1e-3, sigma <= 100.
inline constexpr int kLambdaMax = 512;

// Cost of one-shot Gumbel top-k selection at per-entry budget eps:
//   2 * min{ k*eps, k*eps*(e^{2eps}-1)/(e^{2eps}+1) + eps*sqrt(2k ln(1/delta)) }.
double em_topk_cost(double eps, int k, double delta);

// Inverse of em_topk_cost in eps (monotone; bisection).
double em_eps_from_cost(double target_cost, int k, double delta);

// Strong composition of m mechanisms, each (per_step_eps, delta)-DP: returns
// (eps_g, 2*m*delta) where per_step_eps = eps_g / (2 sqrt(m ln(e + eps_g/(2 m delta)))).
// eps_g is found by bisection to relative tolerance 1e-10.
PrivacyBudget optimal_compose(double per_step_eps, int m, double delta);

// Forward direction of the same relation: the per-step eps that composes to
// `total` over m mechanisms. Closed form, no root finding.
double optimal_decompose(PrivacyBudget total, int m);

// Matrix-level budget of M exponential-mechanism rows: per-row cost
// em_topk_cost(eps, k, delta) plus eps_values when values are also released,
// composed with optimal_compose.
PrivacyBudget em_matrix_budget(double eps, double eps_values, int k, double delta, int m);

// Matrix-level budget of M Gaussian-mechanism rows, each (eps, delta)-DP.
// Independent of k.
PrivacyBudget gm_matrix_budget(double eps, double delta, int m);

// Gaussian mechanism noise scale sqrt(2 ln(1.25/delta)) * c / eps for an
// l2 sensitivity of c.
double gaussian_sigma(double eps, double delta, double c);

// DP-SGD epsilon from the moments bound
//   eps = min over integer lambda in [1, kLambdaMax] of
//         (T q^2 tau^2 lambda (lambda+1) / sigma^2 + ln(1/delta)) / lambda.
// Returns +infinity when sigma == 0 with steps > 0. The bound's derivation
// assumes sigma <= tau; callers should surface sigma_exceeds_tau as a warning.
double sgd_epsilon(const SgdAccountParams& p);

// Same minimization, also reporting the minimizing order so callers can
// surface a warning when the search cap binds.
struct SgdEpsilonDetail {
    double epsilon = 0.0;
    int lambda = 0;
    bool lambda_cap_hit = false;
};
SgdEpsilonDetail sgd_epsilon_detail(const SgdAccountParams& p);

inline bool sigma_exceeds_tau(const SgdAccountParams& p) { return p.sigma > p.tau; }

// Smallest sigma (relative tolerance 1e-6) with sgd_epsilon <= target_eps.
// Throws CalibrationError when no sigma <= 1e6 reaches the target.
double calibrate_sigma(double target_eps, double q, double tau, long steps, double delta);

// Sequential composition of the two stages under node subsampling at rate q':
// (q' (eps_pr + eps_sgd), delta_pr + delta_sgd).
PrivacyBudget total_budget(double eps_pr, double delta_pr, double eps_sgd,
                           double delta_sgd, double q_prime);

// Inverse of total_budget at a given stage ratio: stage targets whose
// combination reproduces `total`. Delta splits evenly.
std::pair<PrivacyBudget, PrivacyBudget> split_budget(PrivacyBudget total,
                                                     double ratio_pr, double q_prime);

}  // namespace accounting
}  // namespace dpar
