#pragma once
// Independent reference values and reference model builders used to verify
// the solver: closed-form value curves for the two worked examples, exact
// stationary-plan payoffs via a linear solve, an analytic scan over
// deterministic action paths, a truncated-horizon lottery LP, and seeded
// tiny random instances.

#include "recdual/model.hpp"
#include "recdual/simplex.hpp"

#include <cstdint>
#include <vector>

namespace recdual {

// --- worked example 1: square-root utility, beta free --------------------
// W(gamma) = [gamma^2/4 + max(0, 1 - gamma)] / (1 - beta); kink at gamma = 1.
double example1_W(double gamma, double beta);

struct Example1Values {
    double V0 = 0.0; // best ex-post (action first) value at the initial state
    double V1 = 0.0; // same, equals V0 here
    double V2 = 0.0; // best ex-ante lottery value = min_gamma W(gamma)
};
Example1Values example1_values(double beta);

// --- worked example 2: power utility c^sigma, beta tied to sigma ---------
// beta(sigma) = 2 (1 - sigma^{sigma/(1-sigma)}); requires
// sigma^{sigma/(1-sigma)} > 3/4 so that beta < 1/2 (strict deterministic
// suboptimality); sigma = 0.5 is rejected by that test (beta would be 1).
struct Example2Solution {
    double sigma = 0.0;
    double beta = 0.0;
    double k = 0.0;       // sigma^{sigma/(1-sigma)} - sigma^{1/(1-sigma)}
    double c_star = 0.0;  // sigma^{1/(1-sigma)}, the saddle consumption
    double value = 0.0;   // W2(1) = k / (1 - beta), common to both variants
};
Example2Solution example2_solve(double sigma); // throws std::domain_error
double example2_W(double gamma, double sigma);

// Exact maximum over deterministic action paths (analytic over off-grid
// consumption): enumerates all 2^prefix_len labor prefixes, bounds each tail
// by its achievable interval, and maximizes the concave path-value function
// over every interval. The result is a valid upper bound on every
// deterministic plan and is strictly below example2_solve().value.
double example2_deterministic_bound(double sigma, int prefix_len = 12);

// --- reference model instances -------------------------------------------
struct ExampleModel {
    ModelSpec model;
    Vec c_of_action, l_of_action; // action labels (empty for tiny instances)
    int x0 = 0;                   // initial state
    int s0 = 0;
    double slater_eps = 0.0;      // interiority margin witnessed by plans[0]
    // stationary Markov plans, action per (x * n_shocks + s);
    // plans[0] satisfies all thresholds with margin slater_eps
    std::vector<std::vector<int>> plans;
};

ExampleModel build_example1_model(double beta, const Vec& gamma_anchors);
ExampleModel build_example2_model(double sigma, const Vec& gamma_anchors);

// action id for the (c, l) pair (within 1e-9); throws if absent
int find_action(const ExampleModel& em, double c, double l);

// seeded tiny instance: 2 states, 2 shocks, 2 actions, one two-period
// constraint whose threshold leaves the all-zeros plan a 0.05 margin
ExampleModel random_tiny_model(std::uint64_t seed);

// --- exact payoffs of a stationary plan -----------------------------------
// plan[x * n_shocks + s] = action; solves (I - beta P) v = payoff rows.
struct PlanPayoffs {
    Vec v0;              // discounted objective from each (x, s)
    std::vector<Vec> vi; // per constraint, discounted payoff from each (x, s)
};
PlanPayoffs plan_payoffs(const ModelSpec& m, const std::vector<int>& plan);

// discounted two-period payoff g_i(t) + beta E g_i(t+1) of a stationary plan,
// evaluated from (x, s); used for threshold-slack checks on reset constraints
double plan_two_period_payoff(const ModelSpec& m, const std::vector<int>& plan, int i, int x,
                              int s);

// --- truncated-horizon lottery LP -----------------------------------------
// Sequence-form realization-plan LP over all history-dependent lotteries up
// to horizon T. Constraints are imposed at every history node; truncated
// tails are relaxed by the worst missing term so the feasible set only
// grows, making the LP value an upper bound that converges at rate beta^T.
struct BruteForceResult {
    double value = 0.0;
    bool feasible = false;
    long n_vars = 0;
    long n_rows = 0;
};
BruteForceResult brute_force_lottery_value(const ModelSpec& m, int T, int x0, int s0);

} // namespace recdual
