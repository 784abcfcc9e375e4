#include "recdual/simplex.hpp"

#include <cmath>
#include <stdexcept>

namespace recdual {

namespace {

// Tableau layout: rows 0..m-1 are constraints, columns 0..n_total-1 are
// variables (originals, surplus, artificials), column n_total is the rhs.
struct Tableau {
    int m = 0;
    int n = 0; // columns excluding rhs
    std::vector<double> a; // m x (n + 1)
    std::vector<int> basis;

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * (n + 1) + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * (n + 1) + c]; }

    void pivot(int pr, int pc) {
        const double piv = at(pr, pc);
        for (int c = 0; c <= n; ++c) at(pr, c) /= piv;
        for (int r = 0; r < m; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (int c = 0; c <= n; ++c) at(r, c) -= f * at(pr, c);
        }
        basis[static_cast<std::size_t>(pr)] = pc;
    }
};

// Runs simplex on the reduced-cost row `cost` (minimize), with columns
// beyond `usable` excluded from entering. Entering: most negative reduced
// cost (Dantzig), which keeps pivot counts low; the lexicographic leaving
// rule below guarantees termination regardless of the entering choice.
// Returns false when unbounded.
bool run_simplex(Tableau& t, std::vector<double>& cost, double& obj, int usable, double eps) {
    const long max_pivots = 2000L + 50L * (static_cast<long>(t.m) + t.n);
    for (long k = 0; k < max_pivots; ++k) {
        int pc = -1;
        double most_neg = -eps;
        for (int c = 0; c < usable; ++c) {
            const double rc = cost[static_cast<std::size_t>(c)];
            if (rc < most_neg) {
                most_neg = rc;
                pc = c;
            }
        }
        if (pc < 0) return true; // optimal
        // Leaving row by the lexicographic rule: among rows with a positive
        // pivot coefficient, take the row minimizing (rhs, row)/coefficient
        // lexicographically. The rhs component is the classic minimum-ratio
        // test; the remaining columns break degenerate ties consistently, so
        // the objective row strictly lex-decreases and no basis repeats.
        // Tolerance windows here are unsafe: they can keep a non-minimal row
        // (losing primal feasibility) or pick tie-breaks inconsistently
        // (allowing cycles).
        int pr = -1;
        for (int r = 0; r < t.m; ++r) {
            const double arc = t.at(r, pc);
            if (arc <= eps) continue;
            if (pr < 0) {
                pr = r;
                continue;
            }
            const double apr = t.at(pr, pc);
            double a = t.at(r, t.n) / arc;
            double b = t.at(pr, t.n) / apr;
            if (a == b) {
                for (int c = 0; c < t.n; ++c) {
                    a = t.at(r, c) / arc;
                    b = t.at(pr, c) / apr;
                    if (a != b) break;
                }
            }
            if (a < b) pr = r;
        }
        if (pr < 0) return false; // unbounded
        // update the cost row alongside the tableau
        const double crow = cost[static_cast<std::size_t>(pc)];
        t.pivot(pr, pc);
        if (crow != 0.0) {
            for (int c = 0; c < t.n; ++c) cost[static_cast<std::size_t>(c)] -= crow * t.at(pr, c);
            obj += crow * t.at(pr, t.n);
            cost[static_cast<std::size_t>(pc)] = 0.0;
        }
    }
    throw std::runtime_error("simplex: pivot limit exceeded");
}

} // namespace

LpSolution solve_lp(const LpProblem& p, double eps) {
    const int n_orig = p.n_vars;
    const int n_ge = static_cast<int>(p.ge_rows.size());
    const int n_eq = static_cast<int>(p.eq_rows.size());
    const int m = n_eq + n_ge;
    const int n_surplus = n_ge;
    const int n_art = m;
    const int n_total = n_orig + n_surplus + n_art;

    Tableau t;
    t.m = m;
    t.n = n_total;
    t.a.assign(static_cast<std::size_t>(m) * (n_total + 1), 0.0);
    t.basis.assign(static_cast<std::size_t>(m), 0);

    int row = 0;
    for (int r = 0; r < n_eq; ++r, ++row) {
        for (int c = 0; c < n_orig; ++c) t.at(row, c) = p.eq_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        t.at(row, n_total) = p.eq_rhs[static_cast<std::size_t>(r)];
    }
    for (int r = 0; r < n_ge; ++r, ++row) {
        for (int c = 0; c < n_orig; ++c) t.at(row, c) = p.ge_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        t.at(row, n_orig + r) = -1.0; // surplus
        t.at(row, n_total) = p.ge_rhs[static_cast<std::size_t>(r)];
    }
    // make rhs nonnegative, then add artificial basis
    for (int r = 0; r < m; ++r) {
        if (t.at(r, n_total) < 0.0)
            for (int c = 0; c <= n_total; ++c) t.at(r, c) = -t.at(r, c);
        t.at(r, n_orig + n_surplus + r) = 1.0;
        t.basis[static_cast<std::size_t>(r)] = n_orig + n_surplus + r;
    }

    // phase 1: minimize sum of artificials
    std::vector<double> cost(static_cast<std::size_t>(n_total), 0.0);
    double obj = 0.0;
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < n_total; ++c) cost[static_cast<std::size_t>(c)] -= t.at(r, c);
        obj += t.at(r, n_total);
    }
    for (int c = n_orig + n_surplus; c < n_total; ++c) cost[static_cast<std::size_t>(c)] = 0.0;
    if (!run_simplex(t, cost, obj, n_orig + n_surplus, eps))
        throw std::runtime_error("simplex: phase 1 unbounded");

    LpSolution sol;
    // Judge feasibility from the tableau itself: the remaining artificial
    // mass is the sum of rhs over rows whose basic variable is artificial.
    // The running `obj` accumulates roundoff across pivots and can drift.
    double art = 0.0;
    for (int r = 0; r < m; ++r)
        if (t.basis[static_cast<std::size_t>(r)] >= n_orig + n_surplus) art += t.at(r, t.n);
    if (art > 1e-7) {
        // The cost row is maintained incrementally and may itself have
        // drifted, stopping phase 1 early. Rebuild the reduced costs
        // exactly from the current basis and give the solve one more try
        // before declaring the program infeasible.
        std::fill(cost.begin(), cost.end(), 0.0);
        for (int r = 0; r < m; ++r) {
            if (t.basis[static_cast<std::size_t>(r)] < n_orig + n_surplus) continue;
            for (int c = 0; c < n_total; ++c) cost[static_cast<std::size_t>(c)] -= t.at(r, c);
        }
        for (int r = 0; r < m; ++r)
            cost[static_cast<std::size_t>(t.basis[static_cast<std::size_t>(r)])] = 0.0;
        obj = art;
        if (!run_simplex(t, cost, obj, n_orig + n_surplus, eps))
            throw std::runtime_error("simplex: phase 1 unbounded");
        art = 0.0;
        for (int r = 0; r < m; ++r)
            if (t.basis[static_cast<std::size_t>(r)] >= n_orig + n_surplus) art += t.at(r, t.n);
    }
    if (art > 1e-7) {
        sol.feasible = false;
        return sol;
    }
    // drive remaining artificials out of the basis where possible
    for (int r = 0; r < m; ++r) {
        if (t.basis[static_cast<std::size_t>(r)] >= n_orig + n_surplus) {
            int pc = -1;
            for (int c = 0; c < n_orig + n_surplus; ++c) {
                if (std::fabs(t.at(r, c)) > eps) {
                    pc = c;
                    break;
                }
            }
            if (pc >= 0) t.pivot(r, pc);
            // otherwise the row is redundant; its artificial stays basic at 0
        }
    }

    // phase 2: minimize -objective
    std::vector<double> cost2(static_cast<std::size_t>(n_total), 0.0);
    for (int c = 0; c < n_orig; ++c) cost2[static_cast<std::size_t>(c)] = -p.objective[static_cast<std::size_t>(c)];
    double obj2 = 0.0;
    // reduce against current basis
    for (int r = 0; r < m; ++r) {
        const int b = t.basis[static_cast<std::size_t>(r)];
        const double cb = cost2[static_cast<std::size_t>(b)];
        if (cb != 0.0) {
            for (int c = 0; c < n_total; ++c) cost2[static_cast<std::size_t>(c)] -= cb * t.at(r, c);
            obj2 += cb * t.at(r, t.n);
            cost2[static_cast<std::size_t>(b)] = 0.0;
        }
    }
    if (!run_simplex(t, cost2, obj2, n_orig + n_surplus, eps)) {
        sol.feasible = true;
        sol.bounded = false;
        return sol;
    }
    sol.feasible = true;
    sol.z.assign(static_cast<std::size_t>(n_orig), 0.0);
    for (int r = 0; r < m; ++r) {
        const int b = t.basis[static_cast<std::size_t>(r)];
        if (b < n_orig) sol.z[static_cast<std::size_t>(b)] = t.at(r, t.n);
    }
    double v = 0.0;
    for (int c = 0; c < n_orig; ++c) v += p.objective[static_cast<std::size_t>(c)] * sol.z[static_cast<std::size_t>(c)];
    sol.value = v;
    return sol;
}

} // namespace recdual
