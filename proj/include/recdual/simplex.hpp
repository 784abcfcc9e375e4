#pragma once
// Dense two-phase primal simplex with Bland's rule, for the small
// truncated-horizon linear programs used as cross-checks.
//
//   maximize   c . z
//   subject to eq_rows  . z  = eq_rhs
//              ge_rows  . z >= ge_rhs
//              z >= 0

#include <vector>

namespace recdual {

struct LpProblem {
    int n_vars = 0;
    std::vector<std::vector<double>> eq_rows;
    std::vector<double> eq_rhs;
    std::vector<std::vector<double>> ge_rows;
    std::vector<double> ge_rhs;
    std::vector<double> objective;
};

struct LpSolution {
    bool feasible = false;
    bool bounded = true;
    double value = 0.0;
    std::vector<double> z;
};

LpSolution solve_lp(const LpProblem& p, double eps = 1e-9);

} // namespace recdual
