#include "recdual/oracles.hpp"

#include "recdual/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace recdual {

double example1_W(double gamma, double beta) {
    return (0.25 * gamma * gamma + std::max(0.0, 1.0 - gamma)) / (1.0 - beta);
}

Example1Values example1_values(double beta) {
    if (!(beta > 0.0 && beta < 0.5))
        throw std::domain_error("example1_values: the closed forms hold for beta in (0, 1/2)");
    Example1Values v;
    v.V0 = beta;
    v.V1 = beta;
    v.V2 = 0.25 / (1.0 - beta);
    return v;
}

Example2Solution example2_solve(double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::domain_error("example2_solve: sigma must lie in (0, 1)");
    Example2Solution out;
    out.sigma = sigma;
    const double s = std::pow(sigma, sigma / (1.0 - sigma));
    if (!(s > 0.75))
        throw std::domain_error(
            "example2_solve: requires sigma^(sigma/(1-sigma)) > 3/4 so the discount factor "
            "2(1 - sigma^(sigma/(1-sigma))) stays below 1/2; sigma = 0.5 gives discount 1");
    out.beta = 2.0 * (1.0 - s);
    out.c_star = std::pow(sigma, 1.0 / (1.0 - sigma));
    out.k = s - out.c_star;
    out.value = out.k / (1.0 - out.beta);
    return out;
}

double example2_W(double gamma, double sigma) {
    const Example2Solution sol = example2_solve(sigma);
    const double hump = gamma > 0.0 ? sol.k * std::pow(gamma, 1.0 / (1.0 - sigma)) : 0.0;
    return (hump + std::max(0.0, 1.0 - gamma)) / (1.0 - sol.beta);
}

double example2_deterministic_bound(double sigma, int prefix_len) {
    const Example2Solution sol = example2_solve(sigma);
    const double beta = sol.beta;
    if (prefix_len < 1 || prefix_len > 24)
        throw std::invalid_argument("example2_deterministic_bound: prefix_len in [1, 24]");
    const double tail = std::pow(beta, prefix_len) / (1.0 - beta);
    const double arg_opt = std::pow(sigma, sigma / (1.0 - sigma)) / (1.0 - beta);
    auto f = [&](double la) {
        if (la <= 0.0) return 0.0;
        return la - std::pow((1.0 - beta) * la, 1.0 / sigma) / (1.0 - beta);
    };
    double best = f(0.0);
    const std::uint32_t count = 1u << prefix_len;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        double la = 0.0, bt = 1.0;
        for (int t = 0; t < prefix_len; ++t, bt *= beta)
            if ((mask >> t) & 1u) la += bt;
        const double arg = std::clamp(arg_opt, la, la + tail);
        best = std::max(best, f(arg));
    }
    return best;
}

namespace {

Vec dedupe_sorted(Vec v, double tol) {
    std::sort(v.begin(), v.end());
    Vec out;
    for (double x : v)
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    return out;
}

// two endogenous states (0 = entry, 1 = continuation), one shock, one
// accumulating constraint; actions are (consumption, labor in {0, 1}) pairs
// with reward l - c and constraint payoff c^p - l^p. The entry threshold is
// 0; the continuation threshold is -10 L (never binding), so the constraint
// binds only where the plan starts.
ExampleModel make_cl_model(double beta, double p, const Vec& cgrid) {
    ExampleModel em;
    ModelSpec& m = em.model;
    const int nc = static_cast<int>(cgrid.size());
    m.n_shocks = 1;
    m.n_states = 2;
    m.n_actions = 2 * nc;
    m.n_constraints = 1;
    m.beta = beta;
    m.transition = {1.0};
    m.horizon = {Horizon::infinite};
    const std::size_t sz = m.table_size();
    m.reward.assign(sz, 0.0);
    m.g.assign(1, Vec(sz, 0.0));
    m.gbar.assign(1, Vec(sz, 0.0));
    m.feasible.assign(sz, 1);
    m.next_state.assign(sz, 1);
    em.c_of_action.resize(static_cast<std::size_t>(m.n_actions));
    em.l_of_action.resize(static_cast<std::size_t>(m.n_actions));
    for (int ic = 0; ic < nc; ++ic) {
        for (int il = 0; il < 2; ++il) {
            const int a = ic * 2 + il;
            const double c = cgrid[static_cast<std::size_t>(ic)];
            em.c_of_action[static_cast<std::size_t>(a)] = c;
            em.l_of_action[static_cast<std::size_t>(a)] = il;
            const double gval = std::pow(c, p) - (il ? 1.0 : 0.0);
            for (int x = 0; x < 2; ++x) {
                const std::size_t e = m.idx(x, a, 0);
                m.reward[e] = il - c;
                m.g[0][e] = gval;
            }
        }
    }
    const double L = lipschitz_bound(m);
    const double big = 10.0 * L;
    for (int a = 0; a < m.n_actions; ++a) {
        m.gbar[0][m.idx(0, a, 0)] = 0.0;
        m.gbar[0][m.idx(1, a, 0)] = -big;
    }
    em.x0 = 0;
    em.s0 = 0;
    return em;
}

} // namespace

int find_action(const ExampleModel& em, double c, double l) {
    for (std::size_t a = 0; a < em.c_of_action.size(); ++a)
        if (std::fabs(em.c_of_action[a] - c) <= 1e-9 && std::fabs(em.l_of_action[a] - l) <= 1e-9)
            return static_cast<int>(a);
    throw std::logic_error("find_action: no action with the requested labels");
}

ExampleModel build_example1_model(double beta, const Vec& gamma_anchors) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("build_example1_model: beta in (0, 1)");
    const double cmax = 2.26; // covers the consumption optimum (gamma/2)^2 up to gamma ~ 3
    Vec cs = {0.0, 1e-4, 4e-4, 1.6e-3, 6.4e-3, 1.28e-2};
    for (int j = 1; 0.02 * j <= cmax + 1e-12; ++j) cs.push_back(0.02 * j);
    cs.push_back(0.25);
    cs.push_back((1.0 - beta) * (1.0 - beta));
    cs.push_back(0.49);
    cs.push_back(1.0);
    for (double g : gamma_anchors) {
        const double c = 0.25 * g * g;
        if (c <= cmax) cs.push_back(c);
    }
    ExampleModel em = make_cl_model(beta, 0.5, dedupe_sorted(std::move(cs), 1e-12));
    // interior plan: consume 0.49 always, work only in the entry period
    const int a_entry = find_action(em, 0.49, 1.0);
    const int a_cont = find_action(em, 0.49, 0.0);
    em.plans.push_back({a_entry, a_cont});
    // binding plan: consumption (1 - beta)^2
    const double cb = (1.0 - beta) * (1.0 - beta);
    em.plans.push_back({find_action(em, cb, 1.0), find_action(em, cb, 0.0)});
    // slack of plans[0] at the entry state: (sqrt(c)-1) + beta sqrt(c)/(1-beta)
    const double rc = std::sqrt(0.49);
    em.slater_eps = (rc - 1.0) + beta * rc / (1.0 - beta);
    return em;
}

ExampleModel build_example2_model(double sigma, const Vec& gamma_anchors) {
    const Example2Solution sol = example2_solve(sigma);
    Vec cs = {0.0, 1e-4, 4e-4, 1.6e-3, 6.4e-3};
    for (int j = 1; 0.005 * j <= 0.62 + 1e-12; ++j) cs.push_back(0.005 * j);
    cs.insert(cs.end(), {0.7, 0.8, 0.9, 1.0, 0.25});
    cs.push_back(sol.c_star);
    Vec gs = gamma_anchors;
    gs.insert(gs.end(), {0.9, 0.95, 1.0, 1.05, 1.1});
    for (double g : gs) {
        if (g <= 0.0) continue;
        const double c = std::pow(sigma * g, 1.0 / (1.0 - sigma));
        if (c <= 1.0) cs.push_back(c);
    }
    ExampleModel em = make_cl_model(sol.beta, sigma, dedupe_sorted(std::move(cs), 1e-12));
    // interior plan: consume 1 always (utility 1), work only in the entry period
    em.plans.push_back({find_action(em, 1.0, 1.0), find_action(em, 1.0, 0.0)});
    em.slater_eps = sol.beta / (1.0 - sol.beta) * 0.98; // slack 0 + beta/(1-beta), rounded down
    return em;
}

ExampleModel random_tiny_model(std::uint64_t seed) {
    SplitMix rng = child_stream(seed, 0x7aULL);
    ExampleModel em;
    ModelSpec& m = em.model;
    m.n_shocks = 2;
    m.n_states = 2;
    m.n_actions = 2;
    m.n_constraints = 1;
    m.beta = 0.4;
    m.horizon = {Horizon::two_period};
    m.transition.assign(4, 0.0);
    for (int s = 0; s < 2; ++s) {
        const double p = 0.2 + 0.6 * rng.u01();
        m.transition[static_cast<std::size_t>(s) * 2] = p;
        m.transition[static_cast<std::size_t>(s) * 2 + 1] = 1.0 - p;
    }
    const std::size_t sz = m.table_size();
    m.reward.resize(sz);
    m.g.assign(1, Vec(sz));
    m.gbar.assign(1, Vec(sz));
    m.feasible.assign(sz, 1);
    m.next_state.resize(sz);
    for (std::size_t e = 0; e < sz; ++e) {
        m.reward[e] = rng.u01();
        m.g[0][e] = rng.u01() - 0.5;
        m.next_state[e] = static_cast<int>(rng.next() & 1u);
    }
    // threshold: the all-zeros plan keeps a 0.05 margin on the two-period
    // payoff from every node
    std::vector<int> plan(static_cast<std::size_t>(m.n_states * m.n_shocks), 0);
    double worst = std::numeric_limits<double>::infinity();
    for (int x = 0; x < 2; ++x)
        for (int s = 0; s < 2; ++s)
            worst = std::min(worst, plan_two_period_payoff(m, plan, 0, x, s));
    const double thr = worst - 0.05;
    std::fill(m.gbar[0].begin(), m.gbar[0].end(), thr);
    em.plans.push_back(std::move(plan));
    em.slater_eps = 0.05;
    em.x0 = 0;
    em.s0 = 0;
    return em;
}

PlanPayoffs plan_payoffs(const ModelSpec& m, const std::vector<int>& plan) {
    const int n = m.n_states * m.n_shocks;
    if (static_cast<int>(plan.size()) != n)
        throw std::invalid_argument("plan_payoffs: plan must assign an action per (state, shock)");
    const int nrhs = 1 + m.n_constraints;
    std::vector<Vec> A(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n), 0.0));
    std::vector<Vec> rhs(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(nrhs), 0.0));
    for (int x = 0; x < m.n_states; ++x) {
        for (int s = 0; s < m.n_shocks; ++s) {
            const int row = x * m.n_shocks + s;
            const int a = plan[static_cast<std::size_t>(row)];
            const std::size_t e = m.idx(x, a, s);
            if (!m.feasible[e]) throw std::logic_error("plan_payoffs: infeasible plan action");
            const int x2 = m.next_state[e];
            A[static_cast<std::size_t>(row)][static_cast<std::size_t>(row)] += 1.0;
            for (int s2 = 0; s2 < m.n_shocks; ++s2)
                A[static_cast<std::size_t>(row)][static_cast<std::size_t>(x2 * m.n_shocks + s2)] -=
                    m.beta * m.pi(s, s2);
            rhs[static_cast<std::size_t>(row)][0] = m.reward[e];
            for (int i = 0; i < m.n_constraints; ++i)
                rhs[static_cast<std::size_t>(row)][static_cast<std::size_t>(1 + i)] =
                    m.g[static_cast<std::size_t>(i)][e];
        }
    }
    // Gaussian elimination with partial pivoting
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::fabs(A[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)]))
                piv = r;
        std::swap(A[static_cast<std::size_t>(col)], A[static_cast<std::size_t>(piv)]);
        std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(piv)]);
        const double d = A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        if (std::fabs(d) < 1e-14) throw std::runtime_error("plan_payoffs: singular system");
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / d;
            if (f == 0.0) continue;
            for (int c2 = col; c2 < n; ++c2)
                A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c2)] -=
                    f * A[static_cast<std::size_t>(col)][static_cast<std::size_t>(c2)];
            for (int k = 0; k < nrhs; ++k)
                rhs[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] -=
                    f * rhs[static_cast<std::size_t>(col)][static_cast<std::size_t>(k)];
        }
    }
    PlanPayoffs out;
    out.v0.resize(static_cast<std::size_t>(n));
    out.vi.assign(static_cast<std::size_t>(m.n_constraints), Vec(static_cast<std::size_t>(n)));
    for (int row = 0; row < n; ++row) {
        const double d = A[static_cast<std::size_t>(row)][static_cast<std::size_t>(row)];
        out.v0[static_cast<std::size_t>(row)] = rhs[static_cast<std::size_t>(row)][0] / d;
        for (int i = 0; i < m.n_constraints; ++i)
            out.vi[static_cast<std::size_t>(i)][static_cast<std::size_t>(row)] =
                rhs[static_cast<std::size_t>(row)][static_cast<std::size_t>(1 + i)] / d;
    }
    return out;
}

double plan_two_period_payoff(const ModelSpec& m, const std::vector<int>& plan, int i, int x,
                              int s) {
    const int a = plan[static_cast<std::size_t>(x * m.n_shocks + s)];
    const std::size_t e = m.idx(x, a, s);
    const int x2 = m.next_state[e];
    double v = m.g[static_cast<std::size_t>(i)][e];
    for (int s2 = 0; s2 < m.n_shocks; ++s2) {
        const int a2 = plan[static_cast<std::size_t>(x2 * m.n_shocks + s2)];
        v += m.beta * m.pi(s, s2) * m.g[static_cast<std::size_t>(i)][m.idx(x2, a2, s2)];
    }
    return v;
}

namespace {

struct BfNode {
    int x = 0, s = 0, depth = 0;
    double shock_prob = 1.0;
    long parent_var = -1; // realization variable feeding this node
    std::size_t var0 = 0;
    std::vector<int> acts;
    std::vector<long> children; // node ids, aligned with (act, s2) expansion order
};

} // namespace

BruteForceResult brute_force_lottery_value(const ModelSpec& m, int T, int x0, int s0) {
    if (T < 1) throw std::invalid_argument("brute_force_lottery_value: T >= 1");
    std::vector<BfNode> nodes;
    nodes.push_back({x0, s0, 0, 1.0, -1, 0, feasible_actions(m, x0, s0), {}});
    std::size_t n_vars = nodes[0].acts.size();
    // breadth-first expansion to depth T-1
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        if (nodes[n].depth == T - 1) continue;
        for (std::size_t k = 0; k < nodes[n].acts.size(); ++k) {
            const int a = nodes[n].acts[k];
            const std::size_t e = m.idx(nodes[n].x, a, nodes[n].s);
            const int x2 = m.next_state[e];
            for (int s2 = 0; s2 < m.n_shocks; ++s2) {
                const double p = m.pi(nodes[n].s, s2);
                if (p <= 0.0) continue;
                BfNode child;
                child.x = x2;
                child.s = s2;
                child.depth = nodes[n].depth + 1;
                child.shock_prob = nodes[n].shock_prob * p;
                child.parent_var = static_cast<long>(nodes[n].var0 + k);
                child.acts = feasible_actions(m, x2, s2);
                child.var0 = n_vars;
                n_vars += child.acts.size();
                nodes[n].children.push_back(static_cast<long>(nodes.size()));
                nodes.push_back(std::move(child));
                if (n_vars > 200000) throw std::runtime_error("brute_force: tree too large");
            }
        }
    }

    LpProblem lp;
    lp.n_vars = static_cast<int>(n_vars);
    lp.objective.assign(n_vars, 0.0);
    for (const auto& nd : nodes) {
        const double w = std::pow(m.beta, nd.depth) * nd.shock_prob;
        for (std::size_t k = 0; k < nd.acts.size(); ++k)
            lp.objective[nd.var0 + k] += w * m.reward[m.idx(nd.x, nd.acts[k], nd.s)];
    }
    // flow conservation
    for (const auto& nd : nodes) {
        std::vector<double> row(n_vars, 0.0);
        for (std::size_t k = 0; k < nd.acts.size(); ++k) row[nd.var0 + k] = 1.0;
        if (nd.parent_var < 0) {
            lp.eq_rows.push_back(std::move(row));
            lp.eq_rhs.push_back(1.0);
        } else {
            row[static_cast<std::size_t>(nd.parent_var)] -= 1.0;
            lp.eq_rows.push_back(std::move(row));
            lp.eq_rhs.push_back(0.0);
        }
    }
    // per-constraint upper bound on any single-period payoff, for tail relaxations
    Vec gmax(static_cast<std::size_t>(m.n_constraints),
             -std::numeric_limits<double>::infinity());
    for (int x = 0; x < m.n_states; ++x)
        for (int a = 0; a < m.n_actions; ++a)
            for (int s = 0; s < m.n_shocks; ++s) {
                const std::size_t e = m.idx(x, a, s);
                if (!m.feasible[e]) continue;
                for (int i = 0; i < m.n_constraints; ++i)
                    gmax[static_cast<std::size_t>(i)] =
                        std::max(gmax[static_cast<std::size_t>(i)],
                                 m.g[static_cast<std::size_t>(i)][e]);
            }
    // one constraint row per node and index, discounted over the in-horizon
    // subtree, thresholds folded into the date-t coefficients, truncated tail
    // relaxed by its largest possible value
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const BfNode& nd = nodes[n];
        for (int i = 0; i < m.n_constraints; ++i) {
            const bool inf_h = m.horizon[static_cast<std::size_t>(i)] == Horizon::infinite;
            const int u_max = inf_h ? T - 1 : std::min(nd.depth + 1, T - 1);
            double relax;
            if (inf_h) {
                relax = std::pow(m.beta, T - nd.depth) * gmax[static_cast<std::size_t>(i)] /
                        (1.0 - m.beta);
            } else {
                relax = nd.depth + 1 <= T - 1 ? 0.0
                                              : m.beta * gmax[static_cast<std::size_t>(i)];
            }
            std::vector<double> row(n_vars, 0.0);
            // discounted subtree contributions, weights relative to node n
            std::vector<std::pair<std::size_t, double>> stack{{n, 1.0}};
            while (!stack.empty()) {
                auto [d, w] = stack.back();
                stack.pop_back();
                const BfNode& dn = nodes[d];
                if (dn.depth > u_max) continue;
                for (std::size_t k = 0; k < dn.acts.size(); ++k)
                    row[dn.var0 + k] +=
                        w * m.g[static_cast<std::size_t>(i)][m.idx(dn.x, dn.acts[k], dn.s)];
                if (dn.depth < u_max)
                    for (long c : dn.children)
                        stack.push_back({static_cast<std::size_t>(c),
                                         w * m.beta * nodes[static_cast<std::size_t>(c)].shock_prob /
                                             dn.shock_prob});
            }
            for (std::size_t k = 0; k < nd.acts.size(); ++k)
                row[nd.var0 + k] +=
                    relax - m.gbar[static_cast<std::size_t>(i)][m.idx(nd.x, nd.acts[k], nd.s)];
            lp.ge_rows.push_back(std::move(row));
            lp.ge_rhs.push_back(0.0);
        }
    }

    LpSolution sol = solve_lp(lp);
    BruteForceResult out;
    out.feasible = sol.feasible && sol.bounded;
    out.value = sol.value;
    out.n_vars = static_cast<long>(n_vars);
    out.n_rows = static_cast<long>(lp.eq_rows.size() + lp.ge_rows.size());
    return out;
}

} // namespace recdual
