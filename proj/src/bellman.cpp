#include "recdual/bellman.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <stdexcept>
#include <thread>

namespace recdual {

double expected_field(const DualValueField& f, const ModelSpec& m, int x_next, int s_from,
                      const double* eta) {
    double v = 0.0;
    for (int s2 = 0; s2 < m.n_shocks; ++s2) {
        const double p = m.pi(s_from, s2);
        if (p > 0.0) v += p * f.evaluate(x_next, s2, eta);
    }
    return v;
}

Vec expected_field_subgrad(const DualValueField& f, const ModelSpec& m, int x_next, int s_from,
                           const double* eta) {
    Vec out(static_cast<std::size_t>(m.n_constraints), 0.0);
    for (int s2 = 0; s2 < m.n_shocks; ++s2) {
        const double p = m.pi(s_from, s2);
        if (p <= 0.0) continue;
        Vec g = f.subgradient(x_next, s2, eta);
        for (int i = 0; i < m.n_constraints; ++i) out[static_cast<std::size_t>(i)] += p * g[static_cast<std::size_t>(i)];
    }
    return out;
}

namespace {

// shared context for the continuation closures of one inner problem
struct ContCtx {
    const DualValueField* f;
    const ModelSpec* m;
    int s;
    Vec gamma;
};

double resolve_lambda_max(const ModelSpec& m, const DualValueField& f, int x, int s,
                          const double* gamma, const BellmanOptions& opt) {
    if (opt.lambda_max > 0.0) return opt.lambda_max;
    const double L = f.lipschitz;
    if (opt.slater_eps > 0.0) {
        double gsum = 0.0;
        for (int i = 0; i < m.n_constraints; ++i) gsum += gamma[i];
        const double vhat = f.evaluate(x, s, gamma);
        return 2.0 * (vhat + (1.0 + gsum) * L) / opt.slater_eps;
    }
    return 10.0 * L / (1.0 - m.beta);
}

} // namespace

InnerProblem build_inner_problem(const ModelSpec& m, const DualValueField& f, int x, int s,
                                 const double* gamma, double lambda_max) {
    const int I = m.n_constraints;
    InnerProblem p;
    p.dim = I;
    p.lambda_max = lambda_max;

    std::vector<int> actions = feasible_actions(m, x, s);
    if (actions.empty()) throw std::logic_error("no feasible action at a reachable node");
    // group by successor state
    std::stable_sort(actions.begin(), actions.end(), [&](int a, int b) {
        return m.next_state[m.idx(x, a, s)] < m.next_state[m.idx(x, b, s)];
    });
    auto ctx = std::make_shared<ContCtx>();
    ctx->f = &f;
    ctx->m = &m;
    ctx->s = s;
    ctx->gamma.assign(gamma, gamma + I);

    p.group_begin.push_back(0);
    int cur_next = -1;
    for (int a : actions) {
        const std::size_t e = m.idx(x, a, s);
        const int nx = m.next_state[e];
        if (nx != cur_next) {
            if (cur_next != -1) p.group_begin.push_back(p.action_id.size());
            cur_next = nx;
            auto eta_of = [ctx](const double* lam, Vec& eta) {
                const int n = ctx->m->n_constraints;
                eta.resize(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i)
                    eta[static_cast<std::size_t>(i)] =
                        ctx->m->horizon[static_cast<std::size_t>(i)] == Horizon::infinite
                            ? ctx->gamma[static_cast<std::size_t>(i)] + lam[i]
                            : lam[i];
            };
            p.group_value.push_back([ctx, nx, eta_of](const double* lam) {
                Vec eta;
                eta_of(lam, eta);
                return ctx->m->beta * expected_field(*ctx->f, *ctx->m, nx, ctx->s, eta.data());
            });
            p.group_subgrad.push_back([ctx, nx, eta_of](const double* lam, double* out) {
                Vec eta;
                eta_of(lam, eta);
                Vec g = expected_field_subgrad(*ctx->f, *ctx->m, nx, ctx->s, eta.data());
                for (int i = 0; i < ctx->m->n_constraints; ++i)
                    out[i] = ctx->m->beta * g[static_cast<std::size_t>(i)];
            });
        }
        double c = m.reward[e];
        for (int i = 0; i < I; ++i) c += gamma[i] * m.g[static_cast<std::size_t>(i)][e];
        p.constant.push_back(c);
        for (int i = 0; i < I; ++i)
            p.slope.push_back(m.g[static_cast<std::size_t>(i)][e] -
                              m.gbar[static_cast<std::size_t>(i)][e]);
        p.action_id.push_back(a);
    }
    p.group_begin.push_back(p.action_id.size());
    return p;
}

NodeSolution bellman_apply(const ModelSpec& m, const DualValueField& f, int x, int s,
                           const double* gamma, const BellmanOptions& opt,
                           const double* warm_lambda) {
    const double cap = resolve_lambda_max(m, f, x, s, gamma, opt);
    NodeSolution out;
    out.lambda_max_used = cap;
    if (f.variant == Variant::infsup) {
        InnerProblem p = build_inner_problem(m, f, x, s, gamma, cap);
        InnerOptions io = opt.inner;
        if (warm_lambda && m.n_constraints == 1) io.warm_hint = warm_lambda[0];
        InnerResult r = minimize_inner(p, io);
        out.value = r.value;
        out.lambda = r.lambda;
        out.kkt = r.kkt;
        out.boundary = r.boundary;
        out.ties = p.evaluate(r.lambda.data(), opt.tie_tol).ties;
        return out;
    }
    // supinf: each action minimizes its own bracket, then take the best action
    std::vector<int> actions = feasible_actions(m, x, s);
    if (actions.empty()) throw std::logic_error("no feasible action at a reachable node");
    out.value = -std::numeric_limits<double>::infinity();
    Vec values(actions.size());
    for (std::size_t k = 0; k < actions.size(); ++k) {
        const int a = actions[k];
        const std::size_t e = m.idx(x, a, s);
        InnerProblem p;
        p.dim = m.n_constraints;
        p.lambda_max = cap;
        double c = m.reward[e];
        for (int i = 0; i < m.n_constraints; ++i) c += gamma[i] * m.g[static_cast<std::size_t>(i)][e];
        p.constant.push_back(c);
        for (int i = 0; i < m.n_constraints; ++i)
            p.slope.push_back(m.g[static_cast<std::size_t>(i)][e] -
                              m.gbar[static_cast<std::size_t>(i)][e]);
        p.action_id.push_back(a);
        p.group_begin = {0, 1};
        const int nx = m.next_state[e];
        auto ctx = std::make_shared<ContCtx>();
        ctx->f = &f;
        ctx->m = &m;
        ctx->s = s;
        ctx->gamma.assign(gamma, gamma + m.n_constraints);
            auto eta_of = [ctx](const double* lam, Vec& eta) {
            const int n = ctx->m->n_constraints;
            eta.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                eta[static_cast<std::size_t>(i)] =
                    ctx->m->horizon[static_cast<std::size_t>(i)] == Horizon::infinite
                        ? ctx->gamma[static_cast<std::size_t>(i)] + lam[i]
                        : lam[i];
        };
        p.group_value.push_back([ctx, nx, eta_of](const double* lam) {
            Vec eta;
            eta_of(lam, eta);
            return ctx->m->beta * expected_field(*ctx->f, *ctx->m, nx, ctx->s, eta.data());
        });
        p.group_subgrad.push_back([ctx, nx, eta_of](const double* lam, double* out2) {
            Vec eta;
            eta_of(lam, eta);
            Vec g = expected_field_subgrad(*ctx->f, *ctx->m, nx, ctx->s, eta.data());
            for (int i = 0; i < ctx->m->n_constraints; ++i)
                out2[i] = ctx->m->beta * g[static_cast<std::size_t>(i)];
        });
        InnerOptions io = opt.inner;
        if (warm_lambda && m.n_constraints == 1) io.warm_hint = warm_lambda[0];
        InnerResult r = minimize_inner(p, io);
        values[k] = r.value;
        if (r.value > out.value) {
            out.value = r.value;
            out.lambda = r.lambda;
            out.kkt = r.kkt;
            out.boundary = r.boundary;
        }
    }
    const double cut = out.value - opt.tie_tol * (1.0 + std::fabs(out.value));
    for (std::size_t k = 0; k < actions.size(); ++k)
        if (values[k] >= cut) out.ties.push_back(actions[k]);
    return out;
}

double box_norm(const GammaGrid& grid, int n_states, int n_shocks, const Vec& delta) {
    const std::size_t nn = grid.nodes();
    const int I = grid.dim();
    double kmax = 0.0;
    for (int d = 0; d < I; ++d) kmax = std::max(kmax, grid.knot_max(d));
    const int K = std::max(1, static_cast<int>(std::ceil(kmax)));
    // assign each node the smallest box index containing it
    std::vector<int> kmin(nn);
    std::vector<int> c(static_cast<std::size_t>(I));
    for (std::size_t node = 0; node < nn; ++node) {
        grid.coords(node, c.data());
        double g = 0.0;
        for (int d = 0; d < I; ++d)
            g = std::max(g, grid.knots[static_cast<std::size_t>(d)][c[d]]);
        kmin[node] = std::max(1, static_cast<int>(std::ceil(g - 1e-12)));
    }
    double total = 0.0;
    std::vector<double> bucket(static_cast<std::size_t>(K) + 1);
    for (int s = 0; s < n_shocks; ++s) {
        for (int x = 0; x < n_states; ++x) {
            std::fill(bucket.begin(), bucket.end(), 0.0);
            const std::size_t base = (static_cast<std::size_t>(x) * n_shocks + s) * nn;
            for (std::size_t node = 0; node < nn; ++node) {
                const int k = std::min(kmin[node], K);
                bucket[static_cast<std::size_t>(k)] =
                    std::max(bucket[static_cast<std::size_t>(k)], std::fabs(delta[base + node]));
            }
            double running = 0.0, sum = 0.0, w = 0.5;
            for (int k = 1; k <= K; ++k, w *= 0.5) {
                running = std::max(running, bucket[static_cast<std::size_t>(k)]);
                sum += w * running;
            }
            total += std::ldexp(std::ldexp(sum, -(x + 1)), -(s + 1));
        }
    }
    return total;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RECDUAL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

SolveResult value_iterate(const ModelSpec& m, const SolveOptions& opt) {
    const double L = lipschitz_bound(m);
    double gamma_max = opt.gamma_max;
    if (gamma_max <= 0.0) {
        gamma_max = opt.node.slater_eps > 0.0 ? 4.0 * L / opt.node.slater_eps
                                              : 10.0 * L / (1.0 - m.beta);
    }
    GammaGrid grid = build_grid(m.n_constraints, gamma_max, opt.grid_n, opt.grid_kind, opt.anchors);

    SolveResult out;
    out.gamma_max_used = gamma_max;
    out.field = init_affine_majorant(m, opt.variant, grid);
    DualValueField& field = out.field;
    const std::size_t nn = field.nodes();
    const std::size_t total = static_cast<std::size_t>(m.n_states) * m.n_shocks * nn;

    // slack of one inner solve in value terms; iterates are monotone up to 2x this
    double slope_bound = 0.0;
    for (int x = 0; x < m.n_states; ++x)
        for (int a = 0; a < m.n_actions; ++a)
            for (int s = 0; s < m.n_shocks; ++s) {
                const std::size_t e = m.idx(x, a, s);
                if (!m.feasible[e]) continue;
                double sl = 0.0;
                for (int i = 0; i < m.n_constraints; ++i)
                    sl += std::fabs(m.g[static_cast<std::size_t>(i)][e] -
                                    m.gbar[static_cast<std::size_t>(i)][e]);
                slope_bound = std::max(slope_bound, sl);
            }
    slope_bound += m.beta * L * m.n_constraints;

    const int threads = resolve_threads(opt.threads);
    Vec next(total), warm(total * static_cast<std::size_t>(m.n_constraints), 0.0);
    double cap_seen = 0.0;

    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 1; it <= opt.max_iter; ++it) {
        std::atomic<std::size_t> cursor{0};
        std::vector<double> caps(static_cast<std::size_t>(threads), 0.0);
        auto worker = [&](int tid) {
            for (;;) {
                const std::size_t idx = cursor.fetch_add(8);
                if (idx >= total) return;
                const std::size_t hi = std::min(idx + 8, total);
                for (std::size_t j = idx; j < hi; ++j) {
                    const std::size_t node = j % nn;
                    const std::size_t xs = j / nn;
                    const int s = static_cast<int>(xs % m.n_shocks);
                    const int x = static_cast<int>(xs / m.n_shocks);
                    Vec gamma = grid.point(node);
                    const double* hint =
                        it > 1 ? warm.data() + j * m.n_constraints : nullptr;
                    NodeSolution sol = bellman_apply(m, field, x, s, gamma.data(), opt.node, hint);
                    next[j] = sol.value;
                    for (int i = 0; i < m.n_constraints; ++i)
                        warm[j * m.n_constraints + i] = sol.lambda[static_cast<std::size_t>(i)];
                    caps[static_cast<std::size_t>(tid)] =
                        std::max(caps[static_cast<std::size_t>(tid)], sol.lambda_max_used);
                }
            }
        };
        if (threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(threads));
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
            for (auto& th : pool) th.join();
        }
        for (double c : caps) cap_seen = std::max(cap_seen, c);

        Vec delta(total);
        double sup = 0.0, mono = 0.0;
        for (std::size_t j = 0; j < total; ++j) {
            delta[j] = next[j] - field.values[j];
            sup = std::max(sup, std::fabs(delta[j]));
            mono = std::max(mono, delta[j]);
        }
        const double bn = box_norm(grid, m.n_states, m.n_shocks, delta);
        std::copy(next.begin(), next.end(), field.values.begin());
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.report.push_back({it, bn, sup, mono, wall});
        if (bn <= opt.tol) {
            out.converged = true;
            break;
        }
    }
    out.lambda_max_used = cap_seen;
    out.inner_value_tol = slope_bound * opt.node.inner.tol_lambda * (1.0 + cap_seen);
    return out;
}

} // namespace recdual
