#include "recdual/run.hpp"

#include "recdual/bellman.hpp"
#include "recdual/dual_field.hpp"
#include "recdual/manifest.hpp"
#include "recdual/model.hpp"
#include "recdual/oracles.hpp"
#include "recdual/policy.hpp"
#include "recdual/ramsey.hpp"
#include "recdual/text_io.hpp"
#include "recdual/version.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace recdual {

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 1;
constexpr int kNoConverge = 2;
constexpr int kIoFail = 3;

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Vec parse_double_list(const std::string& text) {
    Vec out;
    std::string tok;
    std::stringstream ss(text);
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(parse_double(tok));
    }
    return out;
}

std::string join_args(const std::vector<std::string>& args) {
    std::string s = "recdual";
    for (const auto& a : args) {
        s += ' ';
        s += a;
    }
    return s;
}

// Loads and validates a model; throws IoError for unreadable files and
// std::invalid_argument (exit 1) for parse/validation problems.
ModelSpec load_checked_model(const std::string& path, std::ostream& err) {
    ModelSpec m = load_model(path);
    auto violations = validate(m);
    if (!violations.empty()) {
        for (const auto& v : violations) err << path << ": " << v << '\n';
        throw std::invalid_argument(path + ": model validation failed (" +
                                    std::to_string(violations.size()) + " problem(s))");
    }
    return m;
}

void ensure_compatible(const ModelSpec& m, const DualValueField& f) {
    if (f.n_states != m.n_states || f.n_shocks != m.n_shocks ||
        f.n_constraints != m.n_constraints)
        throw std::invalid_argument("field dimensions do not match the model");
    if (std::fabs(f.beta - m.beta) > 1e-12)
        throw std::invalid_argument("field discount factor does not match the model");
}

Vec parse_phi(const std::string& spec, const ModelSpec& m) {
    if (spec == "auto") return initial_promise(m);
    Vec phi = parse_double_list(spec);
    if (phi.size() != static_cast<std::size_t>(m.n_constraints))
        throw std::invalid_argument("--phi needs " + std::to_string(m.n_constraints) +
                                    " comma-separated values (or 'auto')");
    return phi;
}

int classify(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e) != nullptr) return kIoFail;
    return kBadInput;
}

// Shared tail for every file-producing command: run the body, then stamp
// status + wall time into the manifest and write it beside the output. The
// manifest is saved on the error path as well before the code is returned.
template <class Body>
int with_manifest(Manifest& man, const std::string& out_path, std::ostream& err, Body&& body) {
    const double t0 = now_s();
    try {
        const int rc = body();
        man.set("wall_s", now_s() - t0);
        man.set("status", rc == kOk ? "ok" : (rc == kNoConverge ? "non-converged" : "error"));
        man.save_next_to(out_path);
        return rc;
    } catch (const std::exception& e) {
        man.set("wall_s", now_s() - t0);
        man.set("status", "error");
        man.set("error", e.what());
        try {
            man.save_next_to(out_path);
        } catch (...) {
            // the manifest location itself is unwritable; the original error
            // is the one worth reporting
        }
        err << "error: " << e.what() << '\n';
        return classify(e);
    }
}

struct RamseyFlags {
    double p1 = 0.9;
    double g0 = 0.0;
    double g1 = 0.0;
    double g2 = 0.65;
    double beta = 1.0;

    RamseyScenario scenario() const {
        if (!(p1 >= 0.0 && p1 <= 1.0)) throw std::invalid_argument("--p1 must lie in [0, 1]");
        for (double g : {g0, g1, g2})
            if (!(g >= 0.0 && g < 1.0)) throw std::invalid_argument("spending must lie in [0, 1)");
        RamseyScenario sc;
        sc.p1 = p1;
        sc.p2 = 1.0 - p1;
        sc.g0 = g0;
        sc.g1 = g1;
        sc.g2 = g2;
        sc.beta = beta;
        return sc;
    }

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--p1", p1, "probability of state 1")->capture_default_str();
        cmd->add_option("--g0", g0, "date-0 spending")->capture_default_str();
        cmd->add_option("--g1", g1, "state-1 spending")->capture_default_str();
        cmd->add_option("--g2", g2, "state-2 spending")->capture_default_str();
        cmd->add_option("--beta", beta, "discount factor")->capture_default_str();
    }
};

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"recursive dual solver for dynamic programs with forward-looking constraints"};
    app.require_subcommand(1);

    // ---- validate ----------------------------------------------------------
    std::string v_model;
    auto* c_validate = app.add_subcommand("validate", "check a model file and list violations");
    c_validate->add_option("model", v_model, "model file")->required();

    // ---- solve -------------------------------------------------------------
    std::string s_model, s_variant = "infsup", s_grid_kind = "geometric", s_anchors;
    std::string s_out = "field.bin", s_report;
    SolveOptions s_opt;
    auto* c_solve = app.add_subcommand("solve", "run value iteration and write the field");
    c_solve->add_option("model", s_model, "model file")->required();
    c_solve->add_option("--variant", s_variant, "bracket order: infsup or supinf")
        ->check(CLI::IsMember({"infsup", "supinf"}))
        ->capture_default_str();
    c_solve->add_option("--gamma-max", s_opt.gamma_max, "grid radius per constraint (0 = auto)")
        ->capture_default_str();
    c_solve->add_option("--grid-n", s_opt.grid_n, "knots per constraint axis")
        ->check(CLI::Range(2, 100000))
        ->capture_default_str();
    c_solve->add_option("--grid-kind", s_grid_kind, "knot spacing: geometric or uniform")
        ->check(CLI::IsMember({"geometric", "uniform"}))
        ->capture_default_str();
    c_solve->add_option("--anchors", s_anchors, "comma-separated knots to insert");
    c_solve->add_option("--tol", s_opt.tol, "stopping threshold on the weighted box norm")
        ->capture_default_str();
    c_solve->add_option("--max-iter", s_opt.max_iter, "sweep budget")->capture_default_str();
    c_solve->add_option("--threads", s_opt.threads, "worker threads (0 = auto)")
        ->capture_default_str();
    c_solve->add_option("--slater-eps", s_opt.node.slater_eps, "interiority margin (0 = unknown)")
        ->capture_default_str();
    c_solve->add_option("--lambda-max", s_opt.node.lambda_max, "multiplier cap (0 = auto)")
        ->capture_default_str();
    c_solve->add_option("--out", s_out, "field output file")->capture_default_str();
    c_solve->add_option("--report", s_report, "per-iteration norm CSV");

    // ---- policy ------------------------------------------------------------
    std::string p_model, p_field, p_phi = "auto", p_out = "stage.csv";
    int p_x = 0, p_s = 0;
    StageOptions p_opt;
    auto* c_policy = app.add_subcommand("policy", "recover one stage lottery from a field");
    c_policy->add_option("model", p_model, "model file")->required();
    c_policy->add_option("field", p_field, "field file from solve")->required();
    c_policy->add_option("--phi", p_phi, "promise vector, comma-separated (or 'auto')")
        ->capture_default_str();
    c_policy->add_option("--x", p_x, "state index")->capture_default_str();
    c_policy->add_option("--s", p_s, "shock index")->capture_default_str();
    c_policy->add_option("--iters", p_opt.iters, "multiplier iterations")->capture_default_str();
    c_policy->add_option("--sigma0", p_opt.sigma0, "step scale (step k uses sigma0/k)")
        ->capture_default_str();
    c_policy->add_flag("--no-warm-start{false}", p_opt.warm_start,
                       "skip the projected-subgradient warm start");
    c_policy->add_option("--lambda-max", p_opt.lambda_max, "multiplier cap (0 = auto)")
        ->capture_default_str();
    c_policy->add_option("--out", p_out, "stage lottery CSV")->capture_default_str();

    // ---- simulate ----------------------------------------------------------
    std::string m_model, m_field, m_phi = "auto", m_out = "paths.csv";
    SimOptions m_opt;
    m_opt.paths = 10000;
    auto* c_sim = app.add_subcommand("simulate", "chain recovered stages along sampled paths");
    c_sim->add_option("model", m_model, "model file")->required();
    c_sim->add_option("field", m_field, "field file from solve")->required();
    c_sim->add_option("--paths", m_opt.paths, "sample paths")
        ->check(CLI::Range(1L, 100000000L))
        ->capture_default_str();
    c_sim->add_option("--horizon", m_opt.horizon, "periods per path")
        ->check(CLI::Range(1, 100000))
        ->capture_default_str();
    c_sim->add_option("--seed", m_opt.seed, "stream seed")->capture_default_str();
    c_sim->add_option("--x0", m_opt.x0, "initial state")->capture_default_str();
    c_sim->add_option("--s0", m_opt.s0, "initial shock")->capture_default_str();
    c_sim->add_option("--phi", m_phi, "root promise vector (or 'auto')")->capture_default_str();
    c_sim->add_option("--quantum", m_opt.promise_quantum, "promise rounding for the stage cache")
        ->capture_default_str();
    c_sim->add_option("--threads", m_opt.threads, "worker threads (0 = auto)")
        ->capture_default_str();
    c_sim->add_option("--iters", m_opt.stage.iters, "multiplier iterations per stage")
        ->capture_default_str();
    c_sim->add_option("--sigma0", m_opt.stage.sigma0, "stage step scale")->capture_default_str();
    c_sim->add_option("--out", m_out, "path CSV")->capture_default_str();

    // ---- example -----------------------------------------------------------
    int e_which = 1;
    double e_beta = 0.4, e_sigma = 0.1;
    std::string e_out;
    auto* c_example = app.add_subcommand("example", "print closed-form oracle values as CSV");
    c_example->add_option("which", e_which, "1 or 2")
        ->required()
        ->check(CLI::IsMember({1, 2}));
    c_example->add_option("--beta", e_beta, "discount factor (example 1)")->capture_default_str();
    c_example->add_option("--sigma", e_sigma, "utility curvature (example 2)")
        ->capture_default_str();
    c_example->add_option("--out", e_out, "also write the CSV here");

    // ---- ramsey ------------------------------------------------------------
    auto* c_ramsey = app.add_subcommand("ramsey", "two-period fiscal example outputs");
    c_ramsey->require_subcommand(1);

    RamseyFlags r_curves_flags;
    std::string r_curves_out = "fig1.csv";
    double r_step = 1e-3;
    auto* c_curves = c_ramsey->add_subcommand("curves", "surplus and welfare curves CSV");
    r_curves_flags.add_flags(c_curves);
    c_curves->add_option("--step", r_step, "labor grid step")->capture_default_str();
    c_curves->add_option("--out", r_curves_out, "output CSV")->capture_default_str();

    RamseyFlags r_scatter_flags;
    std::string r_branch = "H", r_scatter_out = "fig2.csv";
    bool r_lottery = false;
    double r_bucket = 5e-3;
    auto* c_scatter = c_ramsey->add_subcommand("scatter", "revenue/welfare frontier CSV");
    r_scatter_flags.add_flags(c_scatter);
    c_scatter->add_option("--branch", r_branch, "state-2 labor root: L, H or B (both)")
        ->check(CLI::IsMember({"L", "H", "B"}))
        ->capture_default_str();
    c_scatter->add_flag("--lottery", r_lottery, "randomize over the state-1 roots");
    c_scatter->add_option("--bucket", r_bucket, "revenue bucket width")->capture_default_str();
    c_scatter->add_option("--out", r_scatter_out, "output CSV")->capture_default_str();

    RamseyFlags r_dom_flags;
    double r_b_init = 0.0, r_rev_tol = 2e-3, r_margin = 1e-3;
    std::string r_dom_out;
    auto* c_dom = c_ramsey->add_subcommand("dominance", "lottery-vs-deterministic comparison");
    r_dom_flags.add_flags(c_dom);
    c_dom->add_option("--b-init", r_b_init, "initial debt / revenue target")->required();
    c_dom->add_option("--rev-tol", r_rev_tol, "revenue matching tolerance")
        ->capture_default_str();
    c_dom->add_option("--margin", r_margin, "welfare margin for dominance")
        ->capture_default_str();
    c_dom->add_option("--out", r_dom_out, "also write the CSV here");

    // ---- parse -------------------------------------------------------------
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kBadInput;
    }

    const std::string echo = join_args(args);

    // ---- dispatch ----------------------------------------------------------
    try {
        if (c_validate->parsed()) {
            ModelSpec m;
            try {
                m = load_model(v_model);
            } catch (const IoError& e) {
                err << "error: " << e.what() << '\n';
                return kIoFail;
            } catch (const std::exception& e) {
                err << "error: " << e.what() << '\n';
                return kBadInput;
            }
            auto violations = validate(m);
            if (!violations.empty()) {
                for (const auto& v : violations) out << v_model << ": " << v << '\n';
                return kBadInput;
            }
            out << "ok: states=" << m.n_states << " actions=" << m.n_actions
                << " shocks=" << m.n_shocks << " constraints=" << m.n_constraints
                << " beta=" << format_double(m.beta) << '\n';
            return kOk;
        }

        if (c_solve->parsed()) {
            Manifest man;
            man.set("command", echo);
            man.set("version", RECDUAL_VERSION_STRING);
            return with_manifest(man, s_out, err, [&]() -> int {
                ModelSpec m = load_checked_model(s_model, err);
                s_opt.variant = s_variant == "supinf" ? Variant::supinf : Variant::infsup;
                s_opt.grid_kind = s_grid_kind == "uniform" ? GridKind::uniform
                                                           : GridKind::geometric_uniform;
                if (!s_anchors.empty()) s_opt.anchors = parse_double_list(s_anchors);
                SolveResult sr = value_iterate(m, s_opt);
                save_field(sr.field, s_out);
                man.set("model", s_model);
                man.set("variant", s_variant);
                man.set("grid_n", s_opt.grid_n);
                man.set("grid_kind", s_grid_kind);
                man.set("tol", s_opt.tol);
                man.set("max_iter", s_opt.max_iter);
                man.set("threads", resolve_threads(s_opt.threads));
                man.set("gamma_max_used", sr.gamma_max_used);
                man.set("lambda_max_used", sr.lambda_max_used);
                man.set("inner_value_tol", sr.inner_value_tol);
                man.set("iterations", static_cast<long long>(sr.report.size()));
                man.set("converged", sr.converged);
                if (!sr.report.empty()) {
                    man.set("final_box_norm", sr.report.back().box_norm);
                    double worst_mono = 0.0;
                    for (const auto& row : sr.report)
                        worst_mono = std::max(worst_mono, row.mono_violation);
                    man.set("max_monotonicity_violation", worst_mono);
                }
                Vec origin(static_cast<std::size_t>(sr.field.n_constraints), 0.0);
                man.set("value_at_zero_x0_s0", sr.field.evaluate(0, 0, origin.data()));
                man.set("field_file", s_out);
                if (!s_report.empty()) {
                    CsvWriter w;
                    w.cell("iter");
                    w.cell("box_norm");
                    w.cell("sup_norm");
                    w.cell("max_monotonicity_violation");
                    w.cell("wall_s");
                    w.end_row();
                    for (const auto& row : sr.report) {
                        w.cell(row.iter);
                        w.cell(row.box_norm);
                        w.cell(row.sup_norm);
                        w.cell(row.mono_violation);
                        w.cell(row.wall_s);
                        w.end_row();
                    }
                    w.save(s_report);
                    man.save_next_to(s_report);
                }
                if (!sr.converged) {
                    err << "error: value iteration did not reach tol=" << format_double(s_opt.tol)
                        << " within " << s_opt.max_iter << " sweeps\n";
                    return kNoConverge;
                }
                out << "converged in " << sr.report.size() << " sweeps; value at the origin "
                    << format_double(sr.field.evaluate(0, 0, origin.data())) << "; field in "
                    << s_out << '\n';
                return kOk;
            });
        }

        if (c_policy->parsed()) {
            Manifest man;
            man.set("command", echo);
            man.set("version", RECDUAL_VERSION_STRING);
            return with_manifest(man, p_out, err, [&]() -> int {
                ModelSpec m = load_checked_model(p_model, err);
                DualValueField f = load_field(p_field);
                ensure_compatible(m, f);
                if (p_x < 0 || p_x >= m.n_states || p_s < 0 || p_s >= m.n_shocks)
                    throw std::invalid_argument("--x/--s outside the model's ranges");
                const Vec phi = parse_phi(p_phi, m);
                const StageLottery lot = recover_stage(m, f, p_x, p_s, phi, p_opt);
                const StageCheck chk = check_stage(m, f, p_x, p_s, phi, lot);

                CsvWriter w;
                w.cell("action");
                w.cell("prob");
                w.cell("shock_next");
                for (int i = 0; i < f.n_constraints; ++i) w.cell("promise" + std::to_string(i));
                w.end_row();
                for (std::size_t k = 0; k < lot.support.size(); ++k) {
                    for (int s2 = 0; s2 < m.n_shocks; ++s2) {
                        w.cell(lot.support[k]);
                        w.cell(lot.probs[k]);
                        w.cell(s2);
                        const Vec& pr = lot.promised[k * static_cast<std::size_t>(m.n_shocks) +
                                                     static_cast<std::size_t>(s2)];
                        for (double v : pr) w.cell(v);
                        w.end_row();
                    }
                }
                w.save(p_out);

                man.set("model", p_model);
                man.set("field", p_field);
                man.set("x", p_x);
                man.set("s", p_s);
                man.set("iters", lot.iters);
                man.set("support_size", static_cast<long long>(lot.support.size()));
                for (std::size_t i = 0; i < lot.lambda_star.size(); ++i) {
                    man.set("lambda_star" + std::to_string(i), lot.lambda_star[i]);
                    man.set("mu_star" + std::to_string(i), lot.mu_star[i]);
                }
                man.set("multiplier_gap", chk.multiplier_gap);
                man.set("subgradient_dist", chk.subgradient_dist);
                man.set("promise_slack", chk.promise_slack);
                man.set("threshold_slack", chk.threshold_slack);
                man.set("promise_comp", chk.promise_comp);
                man.set("threshold_comp", chk.threshold_comp);
                man.set("worst_residual", chk.worst());
                out << "stage at (x=" << p_x << ", s=" << p_s
                    << "): support=" << lot.support.size()
                    << " worst_residual=" << format_double(chk.worst()) << '\n';
                return kOk;
            });
        }

        if (c_sim->parsed()) {
            Manifest man;
            man.set("command", echo);
            man.set("version", RECDUAL_VERSION_STRING);
            return with_manifest(man, m_out, err, [&]() -> int {
                ModelSpec m = load_checked_model(m_model, err);
                DualValueField f = load_field(m_field);
                ensure_compatible(m, f);
                if (m_opt.x0 < 0 || m_opt.x0 >= m.n_states || m_opt.s0 < 0 ||
                    m_opt.s0 >= m.n_shocks)
                    throw std::invalid_argument("--x0/--s0 outside the model's ranges");
                if (m_phi != "auto") m_opt.phi0 = parse_phi(m_phi, m);
                const SimReport rep = simulate(m, f, m_opt, &m_out);
                man.set("model", m_model);
                man.set("field", m_field);
                man.set("paths", static_cast<long long>(rep.paths));
                man.set("horizon", rep.horizon);
                man.set("seed", static_cast<long long>(m_opt.seed));
                man.set("threads", resolve_threads(m_opt.threads));
                man.set("promise_quantum", m_opt.promise_quantum);
                man.set("mean_objective", rep.mean);
                man.set("stderr_objective", rep.stderr_mean);
                man.set("field_value", rep.field_value);
                man.set("truncation_bound", rep.trunc_bound);
                man.set("value_ok", rep.value_ok(0.0));
                for (std::size_t i = 0; i < rep.mean_g.size(); ++i) {
                    man.set("mean_g" + std::to_string(i), rep.mean_g[i]);
                    man.set("stderr_g" + std::to_string(i), rep.stderr_g[i]);
                }
                man.set("conditional_worst", rep.cond_worst);
                man.set("stage_cache_entries", static_cast<long long>(rep.cache_entries));
                out << "simulated " << rep.paths << " paths: mean="
                    << format_double(rep.mean) << " field=" << format_double(rep.field_value)
                    << " gap=" << format_double(std::fabs(rep.mean - rep.field_value))
                    << " bound=" << format_double(rep.trunc_bound + 3.0 * rep.stderr_mean)
                    << '\n';
                return kOk;
            });
        }

        if (c_example->parsed()) {
            CsvWriter w;
            Manifest man;
            man.set("command", echo);
            man.set("version", RECDUAL_VERSION_STRING);
            if (e_which == 1) {
                const Example1Values v = example1_values(e_beta);
                w.cell("V0");
                w.cell("V1");
                w.cell("V2");
                w.end_row();
                w.cell(v.V0);
                w.cell(v.V1);
                w.cell(v.V2);
                w.end_row();
                man.set("beta", e_beta);
                man.set("V0", v.V0);
                man.set("V1", v.V1);
                man.set("V2", v.V2);
            } else {
                const Example2Solution sol = example2_solve(e_sigma); // throws on bad sigma
                w.cell("sigma");
                w.cell("beta");
                w.cell("c_star");
                w.cell("k");
                w.cell("V");
                w.end_row();
                w.cell(sol.sigma);
                w.cell(sol.beta);
                w.cell(sol.c_star);
                w.cell(sol.k);
                w.cell(sol.value);
                w.end_row();
                man.set("sigma", sol.sigma);
                man.set("beta", sol.beta);
                man.set("V", sol.value);
            }
            out << w.str();
            if (!e_out.empty()) {
                return with_manifest(man, e_out, err, [&]() -> int {
                    w.save(e_out);
                    return kOk;
                });
            }
            return kOk;
        }

        if (c_curves->parsed()) {
            Manifest man;
            man.set("command", echo);
            man.set("version", RECDUAL_VERSION_STRING);
            return with_manifest(man, r_curves_out, err, [&]() -> int {
                const RamseyScenario sc = r_curves_flags.scenario();
                const auto rows = ramsey_curves(sc, r_step);
                CsvWriter w;
                w.cell("ell");
                w.cell("f_g0");
                w.cell("f_g2");
                w.cell("welfare_g0");
                w.end_row();
                for (const auto& r : rows) {
                    w.cell(r.ell);
                    w.cell(r.f_g0);
                    w.cell(r.f_g2);
                    w.cell(r.welfare_g0);
                    w.end_row();
                }
                w.save(r_curves_out);
                man.set("rows", static_cast<long long>(rows.size()));
                man.set("h_root", ramsey_h_root());
                man.set("max_debt_g0", max_debt(sc.g0).value);
                man.set("max_debt_g2", max_debt(sc.g2).value);
                return kOk;
            });
        }

        if (c_scatter->parsed()) {
            Manifest man;
            man.set("command", echo);
            man.set("version", RECDUAL_VERSION_STRING);
            return with_manifest(man, r_scatter_out, err, [&]() -> int {
                const RamseyScenario sc = r_scatter_flags.scenario();
                const auto rows = ramsey_frontier(sc, r_lottery, r_branch[0], r_bucket);
                CsvWriter w;
                w.cell("b");
                w.cell("ell0");
                w.cell("ell1");
                w.cell("ell2");
                w.cell("pi1");
                w.cell("revenue");
                w.cell("welfare");
                w.end_row();
                double max_rev = 0.0;
                for (const auto& r : rows) {
                    w.cell(r.b);
                    w.cell(r.ell0);
                    w.cell(r.ell1);
                    w.cell(r.ell2);
                    w.cell(r.pi1);
                    w.cell(r.revenue);
                    w.cell(r.welfare);
                    w.end_row();
                    max_rev = std::max(max_rev, r.revenue);
                }
                w.save(r_scatter_out);
                man.set("rows", static_cast<long long>(rows.size()));
                man.set("lottery", r_lottery);
                man.set("branch", r_branch);
                man.set("bucket", r_bucket);
                man.set("max_revenue", max_rev);
                return kOk;
            });
        }

        if (c_dom->parsed()) {
            const RamseyScenario sc = r_dom_flags.scenario();
            const DominanceResult res = dominance_check(sc, r_b_init, r_rev_tol, r_margin);
            CsvWriter w;
            w.cell("target");
            w.cell("best_det");
            w.cell("best_lottery");
            w.cell("margin");
            w.cell("feasible_det");
            w.cell("feasible_lottery");
            w.cell("dominates");
            w.end_row();
            w.cell(res.target);
            w.cell(res.feasible_det ? format_double(res.best_det) : "nan");
            w.cell(res.feasible_lot ? format_double(res.best_lot) : "nan");
            w.cell(res.feasible_det && res.feasible_lot ? format_double(res.margin) : "nan");
            w.cell(res.feasible_det ? "true" : "false");
            w.cell(res.feasible_lot ? "true" : "false");
            w.cell(res.dominates ? "true" : "false");
            w.end_row();
            out << w.str();
            const bool infeasible = !res.feasible_det && !res.feasible_lot;
            if (infeasible) err << "error: no configuration attains the revenue target\n";
            if (!r_dom_out.empty()) {
                Manifest man;
                man.set("command", echo);
                man.set("version", RECDUAL_VERSION_STRING);
                man.set("b_init", res.target);
                man.set("best_det", res.best_det);
                man.set("best_lottery", res.best_lot);
                man.set("margin", res.margin);
                man.set("dominates", res.dominates);
                const int rc = with_manifest(man, r_dom_out, err, [&]() -> int {
                    w.save(r_dom_out);
                    return infeasible ? kBadInput : kOk;
                });
                return rc;
            }
            return infeasible ? kBadInput : kOk;
        }
    } catch (const std::exception& e) {
        // commands above handle their own errors when a manifest location is
        // known; this catches failures before that point
        err << "error: " << e.what() << '\n';
        return classify(e);
    }

    err << "error: no subcommand\n";
    return kBadInput;
}

} // namespace recdual
