#include "doctest.h"

#include "recdual/inner_solver.hpp"
#include "recdual/rng.hpp"

#include <cmath>
#include <stdexcept>

using namespace recdual;

namespace {

// G(lam) = max(1 - lam, lam), two pieces, no continuation: minimum 0.5 at 0.5
InnerProblem two_piece() {
    InnerProblem p;
    p.dim = 1;
    p.lambda_max = 2.0;
    p.constant = {1.0, 0.0};
    p.slope = {-1.0, 1.0};
    p.action_id = {0, 1};
    p.group_begin = {0, 2};
    p.group_value = {[](const double*) { return 0.0; }};
    p.group_subgrad = {[](const double*, double* out) { out[0] = 0.0; }};
    return p;
}

} // namespace

TEST_SUITE("inner_solver") {

TEST_CASE("golden_min: smooth and kinked scalar minima") {
    int evals = 0;
    auto [x1, f1] = golden_min([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-10,
                               200, &evals);
    CHECK(x1 == doctest::Approx(0.3).epsilon(1e-7));
    CHECK(f1 < 1e-14);
    CHECK(evals > 0);

    auto [x2, f2] = golden_min([](double x) { return std::fabs(x - 0.7); }, 0.0, 2.0, 1e-10, 200);
    CHECK(x2 == doctest::Approx(0.7).epsilon(1e-7));
    CHECK(f2 < 1e-7);

    auto [x3, f3] = golden_min([](double x) { return std::max(1.0 - x, x); }, 0.0, 2.0, 1e-10,
                               200);
    CHECK(x3 == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(f3 == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("subgrad_min: box projection, start point, flat early exit") {
    auto f = [](const double* z) { return std::fabs(z[0] - 0.3) + std::fabs(z[1] - 0.7); };
    auto sub = [](const double* z, double* g) {
        g[0] = z[0] >= 0.3 ? 1.0 : -1.0;
        g[1] = z[1] >= 0.7 ? 1.0 : -1.0;
    };
    InnerResult r = subgrad_min(f, sub, 2, 2.0, 20000, 0.5);
    CHECK(r.value < 5e-3);
    CHECK(r.lambda[0] == doctest::Approx(0.3).epsilon(5e-3));
    CHECK(r.lambda[1] == doctest::Approx(0.7).epsilon(5e-3));
    CHECK(!r.boundary);

    // warm start right next to the optimum
    Vec start = {0.299, 0.701};
    InnerResult w = subgrad_min(f, sub, 2, 2.0, 500, 0.01, &start);
    CHECK(w.value < 3e-3);

    // zero subgradient ends the loop immediately
    int calls = 0;
    InnerResult flat = subgrad_min([&](const double*) { ++calls; return 4.0; },
                                   [](const double*, double* g) { g[0] = 0.0; }, 1, 2.0, 1000,
                                   1.0);
    CHECK(flat.value == 4.0);
    CHECK(calls <= 3);

    // decreasing objective walks to the upper face and reports it
    InnerResult b = subgrad_min([](const double* z) { return -z[0]; },
                                [](const double*, double* g) { g[0] = -1.0; }, 1, 2.0, 4000, 1.0);
    CHECK(b.boundary);
    CHECK(b.lambda[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("minimize_inner: kinked two-piece objective") {
    const InnerProblem p = two_piece();
    const InnerResult r = minimize_inner(p, InnerOptions{});
    CHECK(r.lambda[0] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(!r.boundary);
    CHECK(r.kkt < 1e-6);
    CHECK(r.evals > 0);

    // a warm hint in the wrong region still reaches the true minimizer
    InnerOptions hinted;
    hinted.warm_hint = 1.9;
    const InnerResult h = minimize_inner(p, hinted);
    CHECK(h.lambda[0] == doctest::Approx(0.5).epsilon(1e-6));
    hinted.warm_hint = 0.5;
    const InnerResult h2 = minimize_inner(p, hinted);
    CHECK(h2.value == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("minimize_inner: slack problem pins the multiplier at zero") {
    InnerProblem p;
    p.dim = 1;
    p.lambda_max = 2.0;
    p.constant = {1.0, 0.5};
    p.slope = {0.2, 0.3}; // strictly positive slack: G increases in lambda
    p.action_id = {0, 1};
    p.group_begin = {0, 2};
    p.group_value = {[](const double*) { return 0.0; }};
    p.group_subgrad = {[](const double*, double* out) { out[0] = 0.0; }};
    const InnerResult r = minimize_inner(p, InnerOptions{});
    CHECK(r.lambda[0] < 1e-8);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.kkt < 1e-6);
}

TEST_CASE("minimize_inner: smooth continuation composed through the group") {
    InnerProblem p;
    p.dim = 1;
    p.lambda_max = 3.0;
    p.constant = {0.0};
    p.slope = {0.0};
    p.action_id = {0};
    p.group_begin = {0, 1};
    p.group_value = {[](const double* z) { return (z[0] - 1.2) * (z[0] - 1.2); }};
    p.group_subgrad = {[](const double* z, double* out) { out[0] = 2.0 * (z[0] - 1.2); }};
    const InnerResult r = minimize_inner(p, InnerOptions{});
    CHECK(r.lambda[0] == doctest::Approx(1.2).epsilon(1e-6));
    CHECK(r.value < 1e-10);
    CHECK(!r.boundary);
}

TEST_CASE("minimize_inner: lower-face solution flags boundary") {
    InnerProblem p;
    p.dim = 1;
    p.lambda_max = 2.0;
    p.constant = {0.0};
    p.slope = {-1.0}; // G = -lambda, decreasing: optimum at lambda_max
    p.action_id = {0};
    p.group_begin = {0, 1};
    p.group_value = {[](const double*) { return 0.0; }};
    p.group_subgrad = {[](const double*, double* out) { out[0] = 0.0; }};
    const InnerResult r = minimize_inner(p, InnerOptions{});
    CHECK(r.boundary);
    CHECK(r.lambda[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.value == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("minimize_inner: two multipliers, two successor groups") {
    // Group 0 holds the two live pieces max(1 - l1, l1) and carries the
    // continuation (l2 - 0.7)^2, so the objective is their sum; group 1's
    // lone piece sits far below and never attains the max. Minimum 0.5 at
    // (0.5, 0.7).
    InnerProblem p;
    p.dim = 2;
    p.lambda_max = 2.0;
    p.constant = {1.0, 0.0, -50.0};
    p.slope = {-1.0, 0.0, 1.0, 0.0, 0.0, 0.0};
    p.action_id = {0, 1, 2};
    p.group_begin = {0, 2, 3};
    p.group_value = {[](const double* z) { return (z[1] - 0.7) * (z[1] - 0.7); },
                     [](const double*) { return 0.0; }};
    p.group_subgrad = {[](const double* z, double* out) {
                           out[0] = 0.0;
                           out[1] = 2.0 * (z[1] - 0.7);
                       },
                       [](const double*, double* out) { out[0] = 0.0; out[1] = 0.0; }};
    InnerOptions opt;
    opt.subgrad_iters = 20000;
    const InnerResult r = minimize_inner(p, opt);
    CHECK(r.value == doctest::Approx(0.5).epsilon(2e-2));
    CHECK(r.lambda[0] == doctest::Approx(0.5).epsilon(0.08));
    CHECK(r.lambda[1] == doctest::Approx(0.7).epsilon(0.08));

    CHECK_THROWS_AS(minimize_inner(InnerProblem{}, InnerOptions{}), std::invalid_argument);
}

TEST_CASE("evaluate: value agreement, tie sets, supporting subgradients") {
    InnerProblem p = two_piece();
    // duplicate the second piece under a different action id
    p.constant.push_back(0.0);
    p.slope.push_back(1.0);
    p.action_id = {0, 1, 9};
    p.group_begin = {0, 3};

    SplitMix rng(11);
    for (int t = 0; t < 50; ++t) {
        const double a = 2.0 * rng.u01();
        const double b = 2.0 * rng.u01();
        const auto da = p.evaluate(&a);
        CHECK(da.value == doctest::Approx(p.value(&a)).epsilon(1e-14));
        // convexity along the segment
        const double mid = 0.5 * (a + b);
        CHECK(p.value(&mid) <= 0.5 * (p.value(&a) + p.value(&b)) + 1e-12);
        // the reported subgradient supports the graph
        CHECK(p.value(&b) >= da.value + da.subgrad[0] * (b - a) - 1e-9);
    }

    // at the crossing both families tie; the duplicated pieces always tie
    const double cross = 0.5;
    const auto d = p.evaluate(&cross);
    CHECK(d.ties.size() == 3);
    const double right = 1.5;
    const auto d2 = p.evaluate(&right);
    CHECK(d2.ties.size() == 2);
    CHECK(d2.ties[0] == 1);
    CHECK(d2.ties[1] == 9);
}

} // TEST_SUITE
