#include "doctest.h"

#include "recdual/bellman.hpp"
#include "test_support.hpp"

#include <cmath>
#include <cstdlib>

using namespace recdual;

TEST_SUITE("bellman") {

TEST_CASE("expected_field: probability-weighted continuation and slopes") {
    DualValueField f;
    f.variant = Variant::infsup;
    f.n_states = 1;
    f.n_shocks = 2;
    f.n_constraints = 1;
    f.beta = 0.5;
    f.lipschitz = 4.0;
    f.horizon = {Horizon::infinite};
    f.grid.knots = {{0.0, 2.0}};
    f.values = {0.0, 2.0, 1.0, 3.0}; // f(s=0) = eta, f(s=1) = 1 + eta

    ModelSpec m;
    m.n_shocks = 2;
    m.n_states = 1;
    m.n_actions = 1;
    m.n_constraints = 1;
    m.beta = 0.5;
    m.transition = {0.3, 0.7, 0.6, 0.4};

    const double eta = 1.0;
    CHECK(expected_field(f, m, 0, 0, &eta) == doctest::Approx(0.3 * 1.0 + 0.7 * 2.0).epsilon(1e-14));
    CHECK(expected_field(f, m, 0, 1, &eta) == doctest::Approx(0.6 * 1.0 + 0.4 * 2.0).epsilon(1e-14));
    CHECK(expected_field_subgrad(f, m, 0, 0, &eta)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expected_field_subgrad(f, m, 0, 1, &eta)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build_inner_problem: constants, slopes, grouped continuation") {
    const ModelSpec m = testsup::slack_two_action_model();
    GammaGrid grid = build_grid(1, 2.0, 5, GridKind::uniform, {});
    const DualValueField f = init_affine_majorant(m, Variant::infsup, grid);
    const double gamma = 0.5;
    const InnerProblem p = build_inner_problem(m, f, 0, 0, &gamma, 80.0);
    CHECK(p.dim == 1);
    CHECK(p.lambda_max == 80.0);
    REQUIRE(p.size() == 2);
    CHECK(p.groups() == 1); // both actions lead to the same successor state
    // constant = r + gamma . g, slope = g - gbar
    CHECK(p.constant[0] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(p.constant[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p.slope[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.slope[1] == doctest::Approx(1.0).epsilon(1e-14));
    // at lam = 0 the continuation is read at eta = gamma + lam = 0.5, so the
    // bracket is 1.5 + beta * 4 * (1 + 0.5)
    double lam = 0.0;
    CHECK(p.value(&lam) == doctest::Approx(1.5 + 0.5 * 4.0 * 1.5).epsilon(1e-12));

    // masking an action shrinks the problem
    ModelSpec masked = m;
    masked.feasible = {1, 0};
    const InnerProblem q = build_inner_problem(masked, f, 0, 0, &gamma, 80.0);
    CHECK(q.size() == 1);
}

TEST_CASE("bellman_apply: one operator application on the affine majorant") {
    const ModelSpec m = testsup::one_action_model();
    GammaGrid grid = build_grid(1, 2.0, 5, GridKind::uniform, {});
    const DualValueField f = init_affine_majorant(m, Variant::infsup, grid);
    BellmanOptions opt;
    for (double gamma : {0.0, 0.7, 2.0}) {
        const NodeSolution ns = bellman_apply(m, f, 0, 0, &gamma, opt);
        CHECK(ns.value == doctest::Approx(3.0 * (1.0 + gamma)).epsilon(1e-7));
        CHECK(ns.lambda[0] < 1e-6); // slack tail constraint keeps the multiplier at 0
        REQUIRE(ns.ties.size() == 1);
        CHECK(ns.ties[0] == 0);
        CHECK(!ns.boundary);
        CHECK(ns.lambda_max_used == doctest::Approx(80.0).epsilon(1e-12)); // 10 L / (1 - beta)
    }

    // reset horizon: continuation is read at eta = lam, giving 3 + gamma
    const ModelSpec m2 = testsup::one_action_model(Horizon::two_period);
    const DualValueField f2 = init_affine_majorant(m2, Variant::infsup, grid);
    const double g1 = 1.0;
    const NodeSolution ns2 = bellman_apply(m2, f2, 0, 0, &g1, opt);
    CHECK(ns2.value == doctest::Approx(4.0).epsilon(1e-6));

    // Slater-derived multiplier cap at gamma = 0: 2 (V + L) / eps
    BellmanOptions slater;
    slater.slater_eps = 0.5;
    const double g0 = 0.0;
    const NodeSolution ns3 = bellman_apply(m, f, 0, 0, &g0, slater);
    CHECK(ns3.lambda_max_used == doctest::Approx(2.0 * (4.0 + 4.0) / 0.5).epsilon(1e-12));
}

TEST_CASE("bellman_apply: maximizing-action tie sets") {
    ModelSpec m = testsup::slack_two_action_model();
    GammaGrid grid = build_grid(1, 2.0, 5, GridKind::uniform, {});
    DualValueField f = init_affine_majorant(m, Variant::infsup, grid);
    BellmanOptions opt;
    const double gamma = 0.5;
    const NodeSolution ns = bellman_apply(m, f, 0, 0, &gamma, opt);
    REQUIRE(ns.ties.size() == 1); // reward 1 strictly beats reward 0
    CHECK(ns.ties[0] == 0);

    m.reward = {1.0, 1.0}; // identical actions now tie
    const NodeSolution tied = bellman_apply(m, f, 0, 0, &gamma, opt);
    REQUIRE(tied.ties.size() == 2);
    CHECK(tied.ties[0] == 0);
    CHECK(tied.ties[1] == 1);
}

TEST_CASE("value_iterate: accumulating constraint reaches 2 (1 + gamma)") {
    const ModelSpec m = testsup::one_action_model();
    SolveOptions opt;
    opt.variant = Variant::infsup;
    opt.gamma_max = 2.0;
    opt.grid_n = 5;
    opt.grid_kind = GridKind::uniform;
    opt.tol = 1e-10;
    opt.max_iter = 300;
    opt.threads = 2;
    const SolveResult res = value_iterate(m, opt);
    CHECK(res.converged);
    CHECK(res.gamma_max_used == 2.0);
    CHECK(res.lambda_max_used == doctest::Approx(80.0).epsilon(1e-12));
    REQUIRE(!res.report.empty());
    CHECK(res.report.back().box_norm <= 1e-10);
    for (std::size_t node = 0; node < res.field.nodes(); ++node) {
        const double g = res.field.grid.knots[0][node];
        CHECK(res.field.at(0, 0, node) == doctest::Approx(2.0 * (1.0 + g)).epsilon(1e-6));
    }
    // iterates decrease from the majorant, up to twice the inner slack
    for (const IterRow& row : res.report)
        CHECK(row.mono_violation <= 2.0 * res.inner_value_tol + 1e-12);
    // the field's own structural invariants hold at the fixed point
    CHECK(check_invariants(res.field).pass(1e-9));

    // same model through the per-action-minimum variant: identical limit
    SolveOptions sup = opt;
    sup.variant = Variant::supinf;
    const SolveResult res2 = value_iterate(m, sup);
    CHECK(res2.converged);
    for (std::size_t node = 0; node < res2.field.nodes(); ++node)
        CHECK(res2.field.at(0, 0, node) ==
              doctest::Approx(res.field.at(0, 0, node)).epsilon(1e-6));
}

TEST_CASE("value_iterate: reset constraint reaches 2 + gamma") {
    const ModelSpec m = testsup::one_action_model(Horizon::two_period);
    SolveOptions opt;
    opt.gamma_max = 2.0;
    opt.grid_n = 5;
    opt.grid_kind = GridKind::uniform;
    opt.tol = 1e-10;
    opt.max_iter = 300;
    opt.threads = 1;
    const SolveResult res = value_iterate(m, opt);
    CHECK(res.converged);
    for (std::size_t node = 0; node < res.field.nodes(); ++node) {
        const double g = res.field.grid.knots[0][node];
        CHECK(res.field.at(0, 0, node) == doctest::Approx(2.0 + g).epsilon(1e-6));
    }
}

TEST_CASE("value_iterate: derived gamma box and anchor placement") {
    const ModelSpec m = testsup::one_action_model();
    SolveOptions opt;
    opt.grid_n = 5;
    opt.grid_kind = GridKind::uniform;
    opt.anchors = {1.0};
    opt.max_iter = 400;
    opt.threads = 1;
    const SolveResult res = value_iterate(m, opt);
    CHECK(res.gamma_max_used == doctest::Approx(80.0).epsilon(1e-12)); // 10 L / (1 - beta)
    bool has_anchor = false;
    for (double k : res.field.grid.knots[0]) has_anchor = has_anchor || k == 1.0;
    CHECK(has_anchor);
    CHECK(res.field.grid.knot_max(0) == doctest::Approx(80.0).epsilon(1e-12));
}

TEST_CASE("box_norm: hand-evaluated nested-box weighting") {
    GammaGrid g;
    g.knots = {{0.0, 1.0, 2.0}};
    // K = 2 boxes; nodes 0 and 1 fall in box 1, node 2 only in box 2
    CHECK(box_norm(g, 1, 1, {1.0, 2.0, 4.0}) ==
          doctest::Approx(0.25 * (0.5 * 2.0 + 0.25 * 4.0)).epsilon(1e-14));
    CHECK(box_norm(g, 1, 1, {0.0, 0.0, 8.0}) == doctest::Approx(0.25 * 2.0).epsilon(1e-14));
    // second state gets half the first state's weight
    CHECK(box_norm(g, 2, 1, {1.0, 1.0, 1.0, 0.0, 0.0, 0.0}) ==
          doctest::Approx(0.25 * 0.75).epsilon(1e-14));
    CHECK(box_norm(g, 2, 1, {0.0, 0.0, 0.0, 1.0, 1.0, 1.0}) ==
          doctest::Approx(0.125 * 0.75).epsilon(1e-14));
}

TEST_CASE("resolve_threads: explicit, environment, hardware fallback") {
    CHECK(resolve_threads(3) == 3);
    ::setenv("RECDUAL_THREADS", "2", 1);
    CHECK(resolve_threads(0) == 2);
    ::unsetenv("RECDUAL_THREADS");
    CHECK(resolve_threads(0) >= 1);
}

} // TEST_SUITE
