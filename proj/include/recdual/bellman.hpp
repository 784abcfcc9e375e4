#pragma once
// One application of the recursive operator at a grid node, and the full
// monotone value iteration from the affine majorant down to its largest
// fixed point.
//
// infsup variant:  min over lam in [0, lambda_max]^I of
//                    max_a [ r + gamma.g + lam.(g - gbar) + beta E V(eta, zeta(x,a,s), s') ]
// supinf variant:  max_a of min over lam of the same bracket, lam chosen per action.
//
// eta_i = gamma_i + lam_i for accumulating (infinite-horizon) constraints and
// eta_i = lam_i for two-period constraints, which reset the carried
// multiplier each period.
//
// The multiplier box is capped at lambda_max. When a Slater margin eps is
// supplied the cap is 2 * (V_hat + (1 + sum gamma) * L) / eps with V_hat the
// current field value at the node; otherwise it falls back to
// 10 * L / (1 - beta).

#include "recdual/dual_field.hpp"
#include "recdual/inner_solver.hpp"
#include "recdual/model.hpp"

#include <cstdint>
#include <vector>

namespace recdual {

// Discounted expected continuation value / subgradient over next shocks.
double expected_field(const DualValueField& f, const ModelSpec& m, int x_next, int s_from,
                      const double* eta);
Vec expected_field_subgrad(const DualValueField& f, const ModelSpec& m, int x_next, int s_from,
                           const double* eta);

struct BellmanOptions {
    double lambda_max = 0.0; // <= 0: derive from slater_eps or the fallback
    double slater_eps = 0.0; // 0: unknown
    double tie_tol = 1e-9;
    InnerOptions inner;
};

struct NodeSolution {
    double value = 0.0;
    Vec lambda;            // minimizing multipliers (of the best action, for supinf)
    std::vector<int> ties; // maximizing actions within tie_tol
    double kkt = 0.0;
    bool boundary = false; // inner solution at the multiplier cap
    double lambda_max_used = 0.0;
};

// Assembles the inner problem for the infsup bracket at (gamma, x, s).
InnerProblem build_inner_problem(const ModelSpec& m, const DualValueField& f, int x, int s,
                                 const double* gamma, double lambda_max);

NodeSolution bellman_apply(const ModelSpec& m, const DualValueField& f, int x, int s,
                           const double* gamma, const BellmanOptions& opt,
                           const double* warm_lambda = nullptr);

struct SolveOptions {
    Variant variant = Variant::infsup;
    double gamma_max = 0.0; // <= 0: derive like lambda_max at gamma = 0
    int grid_n = 64;
    GridKind grid_kind = GridKind::geometric_uniform;
    Vec anchors;
    double tol = 1e-8; // stopping threshold on the weighted box norm
    int max_iter = 400;
    int threads = 0; // 0: RECDUAL_THREADS env or hardware concurrency
    BellmanOptions node;
};

struct IterRow {
    int iter = 0;
    double box_norm = 0.0;       // weighted-box norm of the sweep delta
    double sup_norm = 0.0;       // max |delta| over all nodes
    double mono_violation = 0.0; // max positive delta (iterates should decrease)
    double wall_s = 0.0;
};

struct SolveResult {
    DualValueField field;
    std::vector<IterRow> report;
    bool converged = false;
    double inner_value_tol = 0.0; // value slack of one inner solve; monotone up to 2x this
    double lambda_max_used = 0.0;
    double gamma_max_used = 0.0;
};

SolveResult value_iterate(const ModelSpec& m, const SolveOptions& opt);

// Weighted-box norm of a per-node delta table: sum over shocks and states of
// 2^-(s+1) 2^-(x+1) sum_{k=1..K} 2^-k * max over nodes inside the k-box of |delta|.
double box_norm(const GammaGrid& grid, int n_states, int n_shocks, const Vec& delta);

int resolve_threads(int requested);

} // namespace recdual
