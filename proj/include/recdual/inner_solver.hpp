#pragma once
// Inner minimization over the nonnegative multiplier box.
//
// The stage objective at one grid node is
//
//   G(lam) = max_a [ c_a + lam . slope_a + beta * E continuation(eta(lam), next(a)) ]
//
// which is convex in lam (max of affine pieces plus a convex interpolated
// continuation composed with an affine multiplier update). One multiplier is
// minimized by golden section on [0, lambda_max]; two or more by projected
// subgradient with diminishing steps sigma0/k and best-iterate tracking.
//
// Actions are stored grouped by successor state so the per-lambda reduction
// can run the affine_max kernel per group and add the group's continuation
// value once.

#include "recdual/model.hpp"

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace recdual {

struct InnerProblem {
    int dim = 0;        // number of multipliers
    double lambda_max = 0.0;

    // Grouped-contiguous per-action data. action_id maps local slot -> model
    // action index.
    Vec constant;                    // [n]
    Vec slope;                       // [n * dim]
    std::vector<int> action_id;      // [n]
    std::vector<std::size_t> group_begin; // [G+1]

    // Discounted expected continuation per group, and its subgradient with
    // respect to lam (chain rule through the multiplier update included).
    std::vector<std::function<double(const double*)>> group_value;
    std::vector<std::function<void(const double*, double*)>> group_subgrad;

    std::size_t size() const { return constant.size(); }
    std::size_t groups() const { return group_begin.size() - 1; }

    // Objective value at lam.
    double value(const double* lam) const;

    struct Detail {
        double value = 0.0;
        int argmax_local = -1;           // local slot
        std::vector<int> ties;           // model action ids within tie_tol
        Vec subgrad;                     // slope of argmax + group subgradient
    };
    // Full evaluation: value, maximizing-action tie set (relative tolerance
    // tie_tol * (1 + |value|)) and one subgradient of G at lam.
    Detail evaluate(const double* lam, double tie_tol = 1e-9) const;
};

struct InnerOptions {
    double tol_lambda = 1e-10;  // golden-section interval target, relative to (1 + lambda_max)
    int max_golden_iter = 200;
    int subgrad_iters = 4000;
    double subgrad_sigma0 = 1.0;
    double warm_hint = -1.0;    // dim==1: start bracket near this point when >= 0
};

struct InnerResult {
    Vec lambda;
    double value = 0.0;
    double kkt = 0.0;        // projected-subgradient residual at the solution
    int evals = 0;
    bool boundary = false;   // solution within tolerance of lambda_max
};

InnerResult minimize_inner(const InnerProblem& p, const InnerOptions& opt);

// Golden-section minimization of a convex scalar function on [lo, hi].
// Returns the midpoint of the final bracket.
std::pair<double, double> golden_min(const std::function<double(double)>& f, double lo, double hi,
                                     double tol, int max_iter, int* evals = nullptr);

// Projected subgradient descent over the box [0, hi]^dim with steps
// sigma0 * (1 + hi) / k and best-iterate tracking.
InnerResult subgrad_min(const std::function<double(const double*)>& f,
                        const std::function<void(const double*, double*)>& sub, int dim, double hi,
                        int iters, double sigma0, const Vec* start = nullptr);

} // namespace recdual
