#pragma once
// Two-period fiscal example with quasi-linear preferences: consumption
// utility log(l - g), leisure utility sqrt(1 - l), linear production.
//
//   h(l) = 1 - l / (2 sqrt(1 - l))   marginal-utility-weighted net wedge
//   f(l; g) = (l - g) h(l)           primary surplus in utility units
//
// Date 0 has known spending g0; date 1 draws state s in {1, 2} with
// probabilities (p1, p2) and spending (g1, g2). Non-contingent debt b is
// repaid in every date-1 state, which pins date-1 labor to a root of
// f(l; g_s) = b — either the low-labor or the high-labor root. Randomizing
// between the two roots of the slack state relaxes the date-0 budget:
//
//   revenue(b, config, l0) = f(l0; g0) + (l0 - g0) * beta * E[h(l_s)]
//   welfare = w(l0; g0) + beta * E[w(l_s; g_s)],  w(l; g) = log(l - g) + sqrt(1 - l)

#include <string>
#include <vector>

namespace recdual {

struct RamseyScenario {
    double p1 = 0.9;
    double p2 = 0.1;
    double g0 = 0.0;
    double g1 = 0.0;
    double g2 = 0.65;
    double beta = 1.0;
};

double ramsey_h(double ell);
double ramsey_f(double ell, double g);
double ramsey_welfare_term(double ell, double g); // -inf when l <= g
double ramsey_h_root();                           // 2 sqrt(2) - 2

struct MaxDebt {
    double ell = 0.0;
    double value = 0.0;
};
// maximum of f(.; g) over (g, 1), golden section to 1e-8
MaxDebt max_debt(double g);

struct LaborRoots {
    double lo = 0.0;
    double hi = 0.0;
    bool ok = false; // false when b exceeds the debt capacity for g
};
// the two solutions of f(l; g) = b, bisection to 1e-10; b = 0 gives
// exactly l = g on the left and the h-root on the right
LaborRoots labor_roots(double b, double g);

struct ScatterRow {
    double b = 0.0;
    double ell0 = 0.0;
    double ell1 = 0.0; // expected state-1 labor (pi1 on the low root)
    double ell2 = 0.0;
    double pi1 = 0.0; // probability of the low state-1 root
    double revenue = 0.0;
    double welfare = 0.0;
};

// welfare-maximizing configuration per revenue bucket; deterministic family
// restricts pi1 to {0, 1}. ell2_branch picks the state-2 labor root:
// 'L' low, 'H' high, 'B' both
std::vector<ScatterRow> ramsey_frontier(const RamseyScenario& sc, bool lottery,
                                        char ell2_branch = 'H', double bucket = 5e-3);

struct DominanceResult {
    double target = 0.0;
    double best_det = 0.0;
    double best_lot = 0.0;
    double margin = 0.0; // best_lot - best_det
    bool feasible_det = false;
    bool feasible_lot = false;
    bool dominates = false;
};
// best deterministic vs best randomized welfare among configurations whose
// revenue lands within rev_tol of b_init; dominates when the lottery wins
// by more than win_margin
DominanceResult dominance_check(const RamseyScenario& sc, double b_init, double rev_tol = 2e-3,
                                double win_margin = 1e-3);

struct CurveRow {
    double ell = 0.0;
    double f_g0 = 0.0;
    double f_g2 = 0.0;
    double welfare_g0 = 0.0;
};
std::vector<CurveRow> ramsey_curves(const RamseyScenario& sc, double step = 1e-3);

} // namespace recdual
