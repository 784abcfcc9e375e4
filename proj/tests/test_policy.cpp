#include "doctest.h"

#include "recdual/bellman.hpp"
#include "recdual/oracles.hpp"
#include "recdual/policy.hpp"
#include "recdual/text_io.hpp"
#include "test_support.hpp"

#include <cmath>
#include <stdexcept>

using namespace recdual;

namespace {

// moderately gridded solve of the square-root worked example, shared by the
// stage-recovery cases below (solved once; the tests only read it)
struct SolvedExample {
    ExampleModel em;
    SolveResult sol;
};

const SolvedExample& ex1() {
    static const SolvedExample shared = [] {
        SolvedExample out;
        out.em = build_example1_model(0.4, testsup::shipped_anchors());
        SolveOptions opt;
        opt.variant = Variant::infsup;
        opt.gamma_max = 6.0;
        opt.grid_n = 41;
        opt.grid_kind = GridKind::uniform;
        opt.anchors = {1.0, 1.2, 2.0};
        opt.tol = 1e-8;
        opt.max_iter = 400;
        opt.node.slater_eps = out.em.slater_eps;
        out.sol = value_iterate(out.em.model, opt);
        return out;
    }();
    return shared;
}

double work_probability(const ExampleModel& em, const StageLottery& lot) {
    double p = 0.0;
    for (std::size_t k = 0; k < lot.support.size(); ++k)
        if (em.l_of_action[static_cast<std::size_t>(lot.support[k])] > 0.5) p += lot.probs[k];
    return p;
}

} // namespace

TEST_SUITE("policy") {

TEST_CASE("initial_promise: strictly dominated starting promises") {
    CHECK(initial_promise(testsup::one_action_model())[0] ==
          doctest::Approx(1.0).epsilon(1e-12)); // 1 / (1 - 0.5) - 1
    CHECK(initial_promise(testsup::slack_two_action_model())[0] ==
          doctest::Approx(1.0).epsilon(1e-12));
    const ExampleModel em = build_example1_model(0.4, testsup::shipped_anchors());
    CHECK(initial_promise(em.model)[0] ==
          doctest::Approx(-1.0 / 0.6 - 1.0).epsilon(1e-12)); // min g = -1
}

TEST_CASE("recover_stage: slack model degenerates onto the best action") {
    const ModelSpec m = testsup::slack_two_action_model();
    SolveOptions sopt;
    sopt.gamma_max = 2.0;
    sopt.grid_n = 5;
    sopt.grid_kind = GridKind::uniform;
    sopt.tol = 1e-10;
    sopt.threads = 1;
    const SolveResult sol = value_iterate(m, sopt);
    REQUIRE(sol.converged);

    StageOptions opt;
    opt.iters = 2000;
    const Vec phi = initial_promise(m);
    const StageLottery lot = recover_stage(m, sol.field, 0, 0, phi, opt);
    REQUIRE(lot.support.size() == 1);
    CHECK(lot.support[0] == 0);
    CHECK(lot.probs[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lot.promised.size() == 1);
    CHECK(lot.iters == 2000);
    CHECK(lot.weight_sum > 0.0);
    CHECK(lot.lambda_star[0] < 0.05); // both constraints slack from phi
    CHECK(lot.mu_star[0] < 0.05);
    CHECK(check_stage(m, sol.field, 0, 0, phi, lot).pass(1e-2));

    // full-range averaging is a valid configuration as well
    StageOptions full;
    full.iters = 500;
    full.avg_tail_frac = 0.0;
    const StageLottery lot2 = recover_stage(m, sol.field, 0, 0, phi, full);
    double total = 0.0;
    for (double p : lot2.probs) {
        CHECK(p > 0.0);
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("recover_stage: continuation lottery splits work and rest evenly") {
    const SolvedExample& e = ex1();
    REQUIRE(e.sol.converged);
    const ModelSpec& m = e.em.model;

    const StageLottery lot = recover_stage(m, e.sol.field, 1, 0, {0.0}, StageOptions{});
    double total = 0.0;
    for (double p : lot.probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lot.support.size() >= 2);
    const double p_work = work_probability(e.em, lot);
    CHECK(p_work > 0.45);
    CHECK(p_work < 0.55);
    for (const Vec& ph : lot.promised) CHECK(std::fabs(ph[0]) <= e.sol.field.lipschitz);

    const StageCheck chk = check_stage(m, e.sol.field, 1, 0, {0.0}, lot);
    CHECK(chk.pass(1e-2));
    CHECK(chk.worst() >= 0.0);

    // skewing the weights breaks at least one certified residual
    StageLottery bad = lot;
    const double pw = p_work;
    for (std::size_t k = 0; k < bad.support.size(); ++k) {
        const bool work = e.em.l_of_action[static_cast<std::size_t>(bad.support[k])] > 0.5;
        bad.probs[k] *= work ? 0.9 / pw : 0.1 / (1.0 - pw);
    }
    CHECK(!check_stage(m, e.sol.field, 1, 0, {0.0}, bad).pass(1e-2));
}

TEST_CASE("recover_stage: root stage from the dominated initial promise") {
    const SolvedExample& e = ex1();
    const ModelSpec& m = e.em.model;
    const Vec phi = initial_promise(m);
    const StageLottery lot = recover_stage(m, e.sol.field, 0, 0, phi, StageOptions{});
    const StageCheck chk = check_stage(m, e.sol.field, 0, 0, phi, lot);
    CHECK(chk.pass(1e-2));
    CHECK(lot.lambda_star[0] == doctest::Approx(1.0).epsilon(0.1)); // threshold binds
    CHECK(lot.mu_star[0] < 0.05); // the dominated promise stays slack
}

TEST_CASE("recover_stage: error paths") {
    const ModelSpec reset = testsup::one_action_model(Horizon::two_period);
    GammaGrid grid = build_grid(1, 2.0, 5, GridKind::uniform, {});
    const DualValueField fr = init_affine_majorant(reset, Variant::infsup, grid);
    CHECK_THROWS_AS(recover_stage(reset, fr, 0, 0, {0.0}, StageOptions{}), std::logic_error);

    const ModelSpec m = testsup::one_action_model();
    const DualValueField f = init_affine_majorant(m, Variant::infsup, grid);
    CHECK_THROWS_AS(recover_stage(m, f, 0, 0, {0.0, 0.0}, StageOptions{}),
                    std::invalid_argument);
}

TEST_CASE("simulate: sample mean matches the field root value") {
    const SolvedExample& e = ex1();
    SimOptions opt;
    opt.paths = 20000;
    opt.horizon = 40;
    opt.seed = 1;
    opt.x0 = e.em.x0;
    opt.s0 = e.em.s0;
    const SimReport rep = simulate(e.em.model, e.sol.field, opt);
    CHECK(rep.paths == 20000);
    CHECK(rep.horizon == 40);
    CHECK(rep.field_value == doctest::Approx(0.25 / 0.6).epsilon(5e-3));
    CHECK(rep.trunc_bound < 1e-12); // 0.4^40 * L
    CHECK(rep.stderr_mean > 0.0);
    CHECK(rep.value_ok(0.01));
    CHECK(rep.mean_g.size() == 1);
    CHECK(rep.stderr_g.size() == 1);
    CHECK(rep.cache_entries >= 2);
    CHECK(rep.cache_entries <= 50);
    // tail-windowed conditional residuals do not certify a violation
    CHECK(rep.cond_worst > -0.02);
}

TEST_CASE("simulate: byte-stable across reruns and thread counts") {
    const SolvedExample& e = ex1();
    SimOptions opt;
    opt.paths = 400;
    opt.horizon = 10;
    opt.seed = 7;
    opt.x0 = e.em.x0;
    opt.s0 = e.em.s0;
    opt.threads = 1;

    const std::string csv_a = testsup::scratch("sim_a.csv");
    const std::string csv_b = testsup::scratch("sim_b.csv");
    const SimReport r1 = simulate(e.em.model, e.sol.field, opt, &csv_a);
    opt.threads = 4;
    const SimReport r2 = simulate(e.em.model, e.sol.field, opt, &csv_b);
    CHECK(r1.mean == r2.mean); // bitwise: the path streams don't depend on threading
    CHECK(r1.mean_g[0] == r2.mean_g[0]);
    const std::string bytes_a = read_file(csv_a);
    const std::string bytes_b = read_file(csv_b);
    CHECK(bytes_a == bytes_b);
    CHECK(bytes_a.rfind("path_id,t,shock,action,reward,g0,promise0,discounted_objective\n", 0) ==
          0);

    // a different seed draws different paths
    opt.seed = 8;
    const SimReport r3 = simulate(e.em.model, e.sol.field, opt);
    CHECK(r3.mean != r1.mean);
}

TEST_CASE("simulate: argument validation") {
    const ModelSpec reset = testsup::one_action_model(Horizon::two_period);
    GammaGrid grid = build_grid(1, 2.0, 5, GridKind::uniform, {});
    const DualValueField fr = init_affine_majorant(reset, Variant::infsup, grid);
    CHECK_THROWS_AS(simulate(reset, fr, SimOptions{}), std::logic_error);

    const ModelSpec m = testsup::one_action_model();
    const DualValueField f = init_affine_majorant(m, Variant::infsup, grid);
    SimOptions bad;
    bad.horizon = 0;
    CHECK_THROWS_AS(simulate(m, f, bad), std::invalid_argument);
    bad = SimOptions{};
    bad.paths = 0;
    CHECK_THROWS_AS(simulate(m, f, bad), std::invalid_argument);
    bad = SimOptions{};
    bad.phi0 = {0.0, 0.0};
    CHECK_THROWS_AS(simulate(m, f, bad), std::invalid_argument);
}

} // TEST_SUITE
