#pragma once
// Recovering implementable randomized policies from a converged value field,
// certifying one stage decomposition, and simulating the chained system.
//
// recover_stage runs the averaged multiplier iteration at one (x, s) with a
// supplied promise vector phi: each step picks a maximizing action of the
// promise-augmented bracket, reads next-period promises off the field as
// exact interpolant slopes, steps the threshold and promise multipliers with
// sigma0/k, and accumulates the visited actions into a lottery with
// step-weighted continuation promises. Requires every constraint to be
// accumulating (infinite horizon): reset constraints carry no promise state,
// so this decomposition does not apply to them and the call throws.
//
// check_stage recomputes, from the model tables alone, the six residuals
// that certify the recovered stage: multiplier settling, promises lying in
// the approximate subdifferential of the field at the reference multipliers,
// promise keeping, threshold satisfaction, and both complementary-slackness
// products.
//
// simulate chains recovered stages forward: promises quantized to a fixed
// quantum key a shared lottery cache (recovery always runs on the quantized
// representative, so results are byte-stable under any thread count), paths
// use per-path derived random streams, and the report compares the sample
// mean against the field root value and tail-windowed conditional residuals
// against thresholds.

#include "recdual/dual_field.hpp"
#include "recdual/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace recdual {

struct StageOptions {
    int iters = 10000;
    double sigma0 = 1.0;
    bool warm_start = true;  // seed multipliers from a projected-subgradient solve
    int warm_iters = 2000;
    double lambda_max = 0.0; // multiplier cap; <= 0 derives 10 L / (1 - beta)
    // Fraction of the run excluded from the averaged construction: the
    // lottery, promises and reference multipliers are built from iterations
    // k > iters * avg_tail_frac (suffix averaging). 0 averages the whole run,
    // which hands the early large-step swings a Theta(1/log N) weight and can
    // put non-optimizers in the support.
    double avg_tail_frac = 0.5;
};

struct StageLottery {
    std::vector<int> support; // actions with positive weight
    Vec probs;                // aligned with support
    // promised[k * n_shocks + s2]: promise vector handed to next period when
    // support action k is drawn and shock s2 realizes
    std::vector<Vec> promised;
    Vec lambda_star, mu_star;   // step-weighted tail averages
    Vec lambda_final, mu_final; // last iterates
    double weight_sum = 0.0;
    int iters = 0;
};

StageLottery recover_stage(const ModelSpec& m, const DualValueField& f, int x, int s,
                           const Vec& phi, const StageOptions& opt);

struct StageCheck {
    double multiplier_gap = 0.0;
    double subgradient_dist = 0.0;
    double promise_slack = 0.0;
    double threshold_slack = 0.0;
    double promise_comp = 0.0;
    double threshold_comp = 0.0;
    double worst() const;
    bool pass(double eps) const { return worst() <= eps; }
};

StageCheck check_stage(const ModelSpec& m, const DualValueField& f, int x, int s, const Vec& phi,
                       const StageLottery& lot);

// Promise vector strictly below every attainable discounted constraint
// payoff: (min feasible g_i) / (1 - beta) - 1. Starting from it, the promise
// multiplier stays at zero and the root stage reduces to the plain problem.
Vec initial_promise(const ModelSpec& m);

struct SimOptions {
    long paths = 100000;
    int horizon = 40;
    std::uint64_t seed = 1;
    int x0 = 0;
    int s0 = 0;
    Vec phi0; // empty: initial_promise(m)
    int threads = 0;
    StageOptions stage;
    double promise_quantum = 1e-3; // promise rounding for the stage cache
    int cond_max_t = 4;            // conditional residuals tracked for t < cond_max_t
    long cond_min_samples = 100;   // smaller groups are excluded (and counted)
};

struct CondRow {
    int t = 0;
    int i = 0;
    long groups = 0;
    long excluded = 0;       // groups below the sample floor
    double worst_mean = 0.0; // most negative group mean residual
    double worst_adj = 0.0;  // worst of mean + truncation allowance + 3 stderr
};

struct SimReport {
    long paths = 0;
    int horizon = 0;
    double mean = 0.0;        // sample mean discounted objective
    double stderr_mean = 0.0; // sample standard error of the mean
    double field_value = 0.0; // field at (phi-start multiplier 0, x0, s0)
    double trunc_bound = 0.0; // beta^T * L
    Vec mean_g, stderr_g;     // discounted constraint payoffs from the root
    std::vector<CondRow> rows;
    double cond_worst = 0.0; // min over rows of worst_adj (0 when nothing tracked)
    long cache_entries = 0;  // distinct stage lotteries recovered

    bool value_ok(double extra_tol) const;
};

SimReport simulate(const ModelSpec& m, const DualValueField& f, const SimOptions& opt,
                   const std::string* csv_path = nullptr);

} // namespace recdual
