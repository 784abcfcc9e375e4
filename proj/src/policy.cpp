#include "recdual/policy.hpp"

#include "recdual/bellman.hpp"
#include "recdual/inner_solver.hpp"
#include "recdual/rng.hpp"
#include "recdual/text_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace recdual {

namespace {

struct StageCtx {
    const ModelSpec* m = nullptr;
    const DualValueField* f = nullptr;
    int x = 0, s = 0, I = 0;
    Vec phi;
    std::vector<int> acts;
    Vec r;                    // per action
    std::vector<Vec> g, gbar; // per action, per constraint
    std::vector<int> next_x;  // per action
    std::vector<int> groups;  // distinct successor states
    std::vector<int> group_of;

    void build(const ModelSpec& model, const DualValueField& field, int xx, int ss,
               const Vec& promise) {
        m = &model;
        f = &field;
        x = xx;
        s = ss;
        I = model.n_constraints;
        phi = promise;
        acts = feasible_actions(model, xx, ss);
        if (acts.empty()) throw std::logic_error("recover_stage: no feasible action");
        const std::size_t n = acts.size();
        r.resize(n);
        g.assign(n, Vec(static_cast<std::size_t>(I)));
        gbar.assign(n, Vec(static_cast<std::size_t>(I)));
        next_x.resize(n);
        group_of.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t e = model.idx(xx, acts[k], ss);
            r[k] = model.reward[e];
            for (int i = 0; i < I; ++i) {
                g[k][static_cast<std::size_t>(i)] = model.g[static_cast<std::size_t>(i)][e];
                gbar[k][static_cast<std::size_t>(i)] = model.gbar[static_cast<std::size_t>(i)][e];
            }
            next_x[k] = model.next_state[e];
            int gi = -1;
            for (std::size_t j = 0; j < groups.size(); ++j)
                if (groups[j] == next_x[k]) gi = static_cast<int>(j);
            if (gi < 0) {
                gi = static_cast<int>(groups.size());
                groups.push_back(next_x[k]);
            }
            group_of[k] = gi;
        }
    }

    // value and argmax of the promise-augmented bracket at (lam, mu)
    std::size_t argmax(const double* lam, const double* mu, Vec& eta, Vec& cont,
                       double* value = nullptr) const {
        eta.resize(static_cast<std::size_t>(I));
        for (int i = 0; i < I; ++i) eta[static_cast<std::size_t>(i)] = lam[i] + mu[i];
        cont.resize(groups.size());
        for (std::size_t j = 0; j < groups.size(); ++j)
            cont[j] = m->beta * expected_field(*f, *m, groups[j], s, eta.data());
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < acts.size(); ++k) {
            double v = r[k] + cont[static_cast<std::size_t>(group_of[k])];
            for (int i = 0; i < I; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                v += lam[i] * (g[k][ii] - gbar[k][ii]) + mu[i] * (g[k][ii] - phi[ii]);
            }
            if (v > best) {
                best = v;
                best_k = k;
            }
        }
        if (value) *value = best;
        return best_k;
    }
};

} // namespace

StageLottery recover_stage(const ModelSpec& m, const DualValueField& f, int x, int s,
                           const Vec& phi, const StageOptions& opt) {
    if (!m.all_infinite_horizon())
        throw std::logic_error(
            "recover_stage: stage decomposition is defined only when every constraint is "
            "accumulating (infinite horizon); reset constraints carry no promise state");
    const int I = m.n_constraints;
    if (static_cast<int>(phi.size()) != I)
        throw std::invalid_argument("recover_stage: promise size must match constraint count");
    const double cap =
        opt.lambda_max > 0.0 ? opt.lambda_max : 10.0 * f.lipschitz / (1.0 - m.beta);

    StageCtx ctx;
    ctx.build(m, f, x, s, phi);
    const std::size_t A = ctx.acts.size();
    const int S = m.n_shocks;

    Vec lam(static_cast<std::size_t>(I), 0.0), mu(static_cast<std::size_t>(I), 0.0);
    if (opt.warm_start && opt.warm_iters > 0) {
        // joint multiplier vector z = (lam, mu), minimized by projected subgradient
        auto value = [&](const double* z) {
            Vec eta, cont;
            double v = 0.0;
            ctx.argmax(z, z + I, eta, cont, &v);
            return v;
        };
        auto grad = [&](const double* z, double* out) {
            Vec eta, cont;
            const std::size_t k = ctx.argmax(z, z + I, eta, cont);
            Vec fs = expected_field_subgrad(f, m, ctx.next_x[k], s, eta.data());
            for (int i = 0; i < I; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                const double cont_slope = m.beta * fs[ii];
                out[i] = ctx.g[k][ii] - ctx.gbar[k][ii] + cont_slope;
                out[I + i] = ctx.g[k][ii] - ctx.phi[ii] + cont_slope;
            }
        };
        InnerResult w = subgrad_min(value, grad, 2 * I, cap, opt.warm_iters, opt.sigma0);
        for (int i = 0; i < I; ++i) {
            lam[static_cast<std::size_t>(i)] = w.lambda[static_cast<std::size_t>(i)];
            mu[static_cast<std::size_t>(i)] = w.lambda[static_cast<std::size_t>(I + i)];
        }
    }

    Vec acc_w(A, 0.0);
    Vec acc_phi(A * static_cast<std::size_t>(S) * static_cast<std::size_t>(I), 0.0);
    Vec lam_tail(static_cast<std::size_t>(I), 0.0), mu_tail(static_cast<std::size_t>(I), 0.0);
    double w_all = 0.0, w_tail = 0.0;
    Vec eta, cont, ephi(static_cast<std::size_t>(I));
    std::vector<Vec> phik(static_cast<std::size_t>(S));

    const int N = std::max(1, opt.iters);
    // construction window: iterates k <= k0 update the multipliers but are
    // excluded from the averaged lottery/promise/multiplier estimates. With
    // raw sigma0/k steps the first iterates swing the multipliers across the
    // whole kink neighborhood, and harmonic weights would hand those swings
    // a Theta(1/log N) share of the lottery -- putting non-optimizers in the
    // support. Suffix averaging estimates the same limit objects.
    const double frac = std::clamp(opt.avg_tail_frac, 0.0, 0.99);
    const int k0 = std::min(N - 1, static_cast<int>(frac * N));
    for (int k = 1; k <= N; ++k) {
        const double step = opt.sigma0 / static_cast<double>(k);
        const std::size_t a = ctx.argmax(lam.data(), mu.data(), eta, cont);
        // next-period promises for the chosen action, all successor shocks
        std::fill(ephi.begin(), ephi.end(), 0.0);
        for (int s2 = 0; s2 < S; ++s2) {
            phik[static_cast<std::size_t>(s2)] =
                f.subgradient(ctx.next_x[a], s2, eta.data());
            const double p = m.pi(s, s2);
            if (p > 0.0)
                for (int i = 0; i < I; ++i)
                    ephi[static_cast<std::size_t>(i)] +=
                        p * phik[static_cast<std::size_t>(s2)][static_cast<std::size_t>(i)];
        }
        // accumulate the lottery over the construction window
        if (k > k0) {
            acc_w[a] += step;
            w_all += step;
            for (int s2 = 0; s2 < S; ++s2)
                for (int i = 0; i < I; ++i)
                    acc_phi[(a * static_cast<std::size_t>(S) + s2) * I + i] +=
                        step * phik[static_cast<std::size_t>(s2)][static_cast<std::size_t>(i)];
            for (int i = 0; i < I; ++i) {
                lam_tail[static_cast<std::size_t>(i)] += step * lam[static_cast<std::size_t>(i)];
                mu_tail[static_cast<std::size_t>(i)] += step * mu[static_cast<std::size_t>(i)];
            }
            w_tail += step;
        }
        // multiplier steps
        for (int i = 0; i < I; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double rm = ctx.g[a][ii] - ctx.phi[ii] + m.beta * ephi[ii];
            const double rl = ctx.g[a][ii] - ctx.gbar[a][ii] + m.beta * ephi[ii];
            mu[ii] = std::clamp(mu[ii] - step * rm, 0.0, cap);
            lam[ii] = std::clamp(lam[ii] - step * rl, 0.0, cap);
        }
    }

    StageLottery lot;
    lot.iters = N;
    lot.weight_sum = w_all;
    lot.lambda_final = lam;
    lot.mu_final = mu;
    lot.lambda_star.resize(static_cast<std::size_t>(I));
    lot.mu_star.resize(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i) {
        lot.lambda_star[static_cast<std::size_t>(i)] =
            lam_tail[static_cast<std::size_t>(i)] / w_tail;
        lot.mu_star[static_cast<std::size_t>(i)] = mu_tail[static_cast<std::size_t>(i)] / w_tail;
    }
    for (std::size_t k = 0; k < A; ++k) {
        if (acc_w[k] <= 0.0) continue;
        lot.support.push_back(ctx.acts[k]);
        lot.probs.push_back(acc_w[k] / w_all);
        for (int s2 = 0; s2 < S; ++s2) {
            Vec pr(static_cast<std::size_t>(I));
            for (int i = 0; i < I; ++i)
                pr[static_cast<std::size_t>(i)] =
                    acc_phi[(k * static_cast<std::size_t>(S) + s2) * I + i] / acc_w[k];
            lot.promised.push_back(std::move(pr));
        }
    }
    return lot;
}

double StageCheck::worst() const {
    double w = multiplier_gap;
    w = std::max(w, subgradient_dist);
    w = std::max(w, promise_slack);
    w = std::max(w, threshold_slack);
    w = std::max(w, promise_comp);
    return std::max(w, threshold_comp);
}

namespace {

// smallest delta such that `promise` is a delta-subgradient of the field
// section at eta: max over grid nodes of the supporting-line excess
double subdiff_excess(const DualValueField& f, int x2, int s2, const Vec& eta,
                      const Vec& promise) {
    const double base = f.evaluate(x2, s2, eta.data());
    const std::size_t nn = f.grid.nodes();
    double worst = 0.0;
    for (std::size_t node = 0; node < nn; ++node) {
        Vec p = f.grid.point(node);
        double lin = base;
        for (std::size_t i = 0; i < promise.size(); ++i) lin += promise[i] * (p[i] - eta[i]);
        worst = std::max(worst, lin - f.at(x2, s2, node));
    }
    return worst;
}

} // namespace

StageCheck check_stage(const ModelSpec& m, const DualValueField& f, int x, int s, const Vec& phi,
                       const StageLottery& lot) {
    const int I = m.n_constraints;
    const int S = m.n_shocks;
    StageCheck out;
    for (int i = 0; i < I; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        out.multiplier_gap = std::max(out.multiplier_gap,
                                      std::fabs(lot.lambda_final[ii] - lot.lambda_star[ii]));
        out.multiplier_gap =
            std::max(out.multiplier_gap, std::fabs(lot.mu_final[ii] - lot.mu_star[ii]));
    }
    Vec eta(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i)
        eta[static_cast<std::size_t>(i)] =
            lot.lambda_star[static_cast<std::size_t>(i)] + lot.mu_star[static_cast<std::size_t>(i)];

    // aggregate lottery residuals
    Vec keep(static_cast<std::size_t>(I), 0.0);   // sum psi (g + beta E phi') - phi
    Vec thresh(static_cast<std::size_t>(I), 0.0); // sum psi (g - gbar + beta E phi')
    for (std::size_t k = 0; k < lot.support.size(); ++k) {
        const int a = lot.support[k];
        const double psi = lot.probs[k];
        const std::size_t e = m.idx(x, a, s);
        const int x2 = m.next_state[e];
        Vec ephi(static_cast<std::size_t>(I), 0.0);
        for (int s2 = 0; s2 < S; ++s2) {
            const Vec& pr = lot.promised[k * static_cast<std::size_t>(S) + s2];
            const double p = m.pi(s, s2);
            if (p > 0.0) {
                out.subgradient_dist =
                    std::max(out.subgradient_dist, psi * subdiff_excess(f, x2, s2, eta, pr));
                for (int i = 0; i < I; ++i)
                    ephi[static_cast<std::size_t>(i)] += p * pr[static_cast<std::size_t>(i)];
            }
        }
        for (int i = 0; i < I; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double gv = m.g[ii][e];
            keep[ii] += psi * (gv + m.beta * ephi[ii] - phi[ii]);
            thresh[ii] += psi * (gv - m.gbar[ii][e] + m.beta * ephi[ii]);
        }
    }
    double keep_dot = 0.0, thresh_dot = 0.0;
    for (int i = 0; i < I; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        out.promise_slack = std::max(out.promise_slack, -keep[ii]);
        out.threshold_slack = std::max(out.threshold_slack, -thresh[ii]);
        keep_dot += lot.mu_star[ii] * keep[ii];
        thresh_dot += lot.lambda_star[ii] * thresh[ii];
    }
    out.promise_comp = std::fabs(keep_dot);
    out.threshold_comp = std::fabs(thresh_dot);
    return out;
}

Vec initial_promise(const ModelSpec& m) {
    Vec out(static_cast<std::size_t>(m.n_constraints));
    for (int i = 0; i < m.n_constraints; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        for (int x = 0; x < m.n_states; ++x)
            for (int a = 0; a < m.n_actions; ++a)
                for (int s = 0; s < m.n_shocks; ++s) {
                    const std::size_t e = m.idx(x, a, s);
                    if (m.feasible[e]) lo = std::min(lo, m.g[static_cast<std::size_t>(i)][e]);
                }
        out[static_cast<std::size_t>(i)] = lo / (1.0 - m.beta) - 1.0;
    }
    return out;
}

bool SimReport::value_ok(double extra_tol) const {
    return std::fabs(mean - field_value) <= trunc_bound + 3.0 * stderr_mean + extra_tol;
}

namespace {

struct StageCache {
    std::mutex mtx;
    std::unordered_map<std::string, std::shared_ptr<const StageLottery>> map;

    std::shared_ptr<const StageLottery> get(const std::string& key) {
        std::lock_guard<std::mutex> lk(mtx);
        auto it = map.find(key);
        return it == map.end() ? nullptr : it->second;
    }
    std::shared_ptr<const StageLottery> put(const std::string& key,
                                            std::shared_ptr<const StageLottery> v) {
        std::lock_guard<std::mutex> lk(mtx);
        auto [it, inserted] = map.try_emplace(key, std::move(v));
        return it->second;
    }
    std::size_t size() {
        std::lock_guard<std::mutex> lk(mtx);
        return map.size();
    }
};

std::string cache_key(int x, int s, const std::vector<long long>& q) {
    std::string key;
    key.resize(8 + q.size() * 8);
    std::int32_t hdr[2] = {x, s};
    std::memcpy(key.data(), hdr, 8);
    std::memcpy(key.data() + 8, q.data(), q.size() * 8);
    return key;
}

struct GroupAcc {
    long n = 0;
    Vec sum, sum2;
};

} // namespace

SimReport simulate(const ModelSpec& m, const DualValueField& f, const SimOptions& opt,
                   const std::string* csv_path) {
    if (!m.all_infinite_horizon())
        throw std::logic_error(
            "simulate: requires every constraint to be accumulating (infinite horizon), "
            "matching the stage decomposition it chains");
    const int I = m.n_constraints;
    const int S = m.n_shocks;
    const int T = opt.horizon;
    if (T < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
    if (opt.paths < 1) throw std::invalid_argument("simulate: need at least one path");
    Vec phi0 = opt.phi0.empty() ? initial_promise(m) : opt.phi0;
    if (static_cast<int>(phi0.size()) != I)
        throw std::invalid_argument("simulate: initial promise size must match constraints");
    const double quantum = opt.promise_quantum > 0.0 ? opt.promise_quantum : 1e-3;

    StageCache cache;
    auto get_stage = [&](int x, int s, const Vec& phi_q,
                         const std::vector<long long>& q) -> std::shared_ptr<const StageLottery> {
        const std::string key = cache_key(x, s, q);
        if (auto hit = cache.get(key)) return hit;
        auto fresh = std::make_shared<StageLottery>(recover_stage(m, f, x, s, phi_q, opt.stage));
        if (cache.size() > 100000)
            throw std::runtime_error(
                "simulate: promise cache exceeded 100000 entries; increase promise_quantum");
        return cache.put(key, std::move(fresh));
    };

    // per-(path, t) records for one block
    const long block = 1024;
    std::vector<std::int32_t> rec_a(static_cast<std::size_t>(block) * T);
    std::vector<std::int16_t> rec_s(static_cast<std::size_t>(block) * T);
    std::vector<std::int16_t> rec_x(static_cast<std::size_t>(block) * T);
    Vec rec_phi; // only when csv requested
    const bool want_csv = csv_path != nullptr;
    if (want_csv) rec_phi.assign(static_cast<std::size_t>(block) * T * I, 0.0);

    std::ofstream csv;
    if (want_csv) {
        csv.open(*csv_path, std::ios::binary);
        if (!csv) throw IoError("cannot open " + *csv_path + " for writing");
        csv << "path_id,t,shock,action,reward";
        for (int i = 0; i < I; ++i) csv << ",g" << i;
        for (int i = 0; i < I; ++i) csv << ",promise" << i;
        csv << ",discounted_objective\n";
    }

    // truncation allowances
    double gabs = 0.0;
    Vec gabs_i(static_cast<std::size_t>(I), 0.0);
    for (int x = 0; x < m.n_states; ++x)
        for (int a = 0; a < m.n_actions; ++a)
            for (int s = 0; s < m.n_shocks; ++s) {
                const std::size_t e = m.idx(x, a, s);
                if (!m.feasible[e]) continue;
                for (int i = 0; i < I; ++i)
                    gabs_i[static_cast<std::size_t>(i)] =
                        std::max(gabs_i[static_cast<std::size_t>(i)],
                                 std::fabs(m.g[static_cast<std::size_t>(i)][e]));
            }
    for (double v : gabs_i) gabs = std::max(gabs, v);

    // statistics
    double sum_obj = 0.0, sum_obj2 = 0.0;
    Vec sum_g(static_cast<std::size_t>(I), 0.0), sum_g2(static_cast<std::size_t>(I), 0.0);
    std::map<std::string, GroupAcc> groups; // ordered: deterministic reporting
    const int cond_t = std::min(opt.cond_max_t, T);
    const bool expost = f.variant == Variant::supinf;

    const int threads = resolve_threads(opt.threads);
    Vec disc(static_cast<std::size_t>(T)); // beta^t
    {
        double b = 1.0;
        for (int t = 0; t < T; ++t, b *= m.beta) disc[static_cast<std::size_t>(t)] = b;
    }

    for (long p0 = 0; p0 < opt.paths; p0 += block) {
        const long p1 = std::min(opt.paths, p0 + block);
        std::atomic<long> cursor{p0};
        auto worker = [&]() {
            std::vector<long long> q(static_cast<std::size_t>(I));
            Vec phi_q(static_cast<std::size_t>(I));
            for (;;) {
                const long p = cursor.fetch_add(1);
                if (p >= p1) return;
                SplitMix rng = child_stream(opt.seed, static_cast<std::uint64_t>(p));
                int x = opt.x0, s = opt.s0;
                Vec phi = phi0;
                const std::size_t row0 = static_cast<std::size_t>(p - p0) * T;
                for (int t = 0; t < T; ++t) {
                    for (int i = 0; i < I; ++i) {
                        q[static_cast<std::size_t>(i)] =
                            std::llround(phi[static_cast<std::size_t>(i)] / quantum);
                        phi_q[static_cast<std::size_t>(i)] =
                            static_cast<double>(q[static_cast<std::size_t>(i)]) * quantum;
                    }
                    auto lot = get_stage(x, s, phi_q, q);
                    // draw an action
                    const double u = rng.u01();
                    std::size_t k = 0;
                    double cum = 0.0;
                    for (; k + 1 < lot->support.size(); ++k) {
                        cum += lot->probs[k];
                        if (u < cum) break;
                    }
                    const int a = lot->support[k];
                    rec_a[row0 + t] = a;
                    rec_s[row0 + t] = static_cast<std::int16_t>(s);
                    rec_x[row0 + t] = static_cast<std::int16_t>(x);
                    if (want_csv)
                        for (int i = 0; i < I; ++i)
                            rec_phi[(row0 + t) * I + i] = phi_q[static_cast<std::size_t>(i)];
                    // draw next shock
                    const double u2 = rng.u01();
                    int s2 = 0;
                    double c2 = 0.0;
                    for (; s2 + 1 < S; ++s2) {
                        c2 += m.pi(s, s2);
                        if (u2 < c2) break;
                    }
                    phi = lot->promised[k * static_cast<std::size_t>(S) + s2];
                    x = m.next_state[m.idx(x, a, s)];
                    s = s2;
                }
            }
        };
        if (threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            const int nt = static_cast<int>(std::min<long>(threads, p1 - p0));
            pool.reserve(static_cast<std::size_t>(nt));
            for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }

        // sequential statistics / csv pass, in path order
        std::vector<Vec> suffix(static_cast<std::size_t>(I), Vec(static_cast<std::size_t>(T) + 1));
        std::string keybuf;
        for (long p = p0; p < p1; ++p) {
            const std::size_t row0 = static_cast<std::size_t>(p - p0) * T;
            double obj = 0.0;
            for (int t = 0; t < T; ++t)
                obj += disc[static_cast<std::size_t>(t)] *
                       m.reward[m.idx(rec_x[row0 + t], rec_a[row0 + t], rec_s[row0 + t])];
            sum_obj += obj;
            sum_obj2 += obj * obj;
            for (int i = 0; i < I; ++i) {
                Vec& sf = suffix[static_cast<std::size_t>(i)];
                sf[static_cast<std::size_t>(T)] = 0.0;
                for (int t = T - 1; t >= 0; --t)
                    sf[static_cast<std::size_t>(t)] =
                        m.g[static_cast<std::size_t>(i)]
                           [m.idx(rec_x[row0 + t], rec_a[row0 + t], rec_s[row0 + t])] +
                        m.beta * sf[static_cast<std::size_t>(t) + 1];
                sum_g[static_cast<std::size_t>(i)] += sf[0];
                sum_g2[static_cast<std::size_t>(i)] += sf[0] * sf[0];
            }
            for (int t = 0; t < cond_t; ++t) {
                // group key: t, shocks s_0..s_t, actions a_0..a_{t-1} (+ a_t ex post)
                const int klen = 2 + (t + 1) + t + (expost ? 1 : 0);
                keybuf.resize(static_cast<std::size_t>(klen) * 4);
                int w = 0;
                auto put32 = [&](std::int32_t v) {
                    std::memcpy(keybuf.data() + 4 * static_cast<std::size_t>(w), &v, 4);
                    ++w;
                };
                put32(t);
                put32(expost ? 1 : 0);
                for (int u = 0; u <= t; ++u) put32(rec_s[row0 + u]);
                for (int u = 0; u < t; ++u) put32(rec_a[row0 + u]);
                if (expost) put32(rec_a[row0 + t]);
                auto& acc = groups[keybuf];
                if (acc.n == 0) {
                    acc.sum.assign(static_cast<std::size_t>(I), 0.0);
                    acc.sum2.assign(static_cast<std::size_t>(I), 0.0);
                }
                ++acc.n;
                const std::size_t e = m.idx(rec_x[row0 + t], rec_a[row0 + t], rec_s[row0 + t]);
                for (int i = 0; i < I; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    double tail;
                    if (m.horizon[ii] == Horizon::infinite) {
                        tail = suffix[ii][static_cast<std::size_t>(t)];
                    } else {
                        tail = m.g[ii][e];
                        if (t + 1 < T) {
                            const std::size_t e2 =
                                m.idx(rec_x[row0 + t + 1], rec_a[row0 + t + 1], rec_s[row0 + t + 1]);
                            tail += m.beta * m.g[ii][e2];
                        }
                    }
                    const double resid = tail - m.gbar[ii][e];
                    acc.sum[ii] += resid;
                    acc.sum2[ii] += resid * resid;
                }
            }
            if (want_csv) {
                double cum = 0.0;
                for (int t = 0; t < T; ++t) {
                    const std::size_t e =
                        m.idx(rec_x[row0 + t], rec_a[row0 + t], rec_s[row0 + t]);
                    cum += disc[static_cast<std::size_t>(t)] * m.reward[e];
                    csv << p << ',' << t << ',' << rec_s[row0 + t] << ',' << rec_a[row0 + t]
                        << ',' << format_double(m.reward[e]);
                    for (int i = 0; i < I; ++i)
                        csv << ',' << format_double(m.g[static_cast<std::size_t>(i)][e]);
                    for (int i = 0; i < I; ++i)
                        csv << ',' << format_double(rec_phi[(row0 + t) * I + i]);
                    csv << ',' << format_double(cum) << '\n';
                }
            }
        }
    }
    if (want_csv) {
        csv.flush();
        if (!csv) throw IoError("write failed: " + *csv_path);
    }

    SimReport rep;
    rep.paths = opt.paths;
    rep.horizon = T;
    const double n = static_cast<double>(opt.paths);
    rep.mean = sum_obj / n;
    rep.stderr_mean =
        opt.paths > 1
            ? std::sqrt(std::max(0.0, (sum_obj2 - n * rep.mean * rep.mean) / (n - 1.0)) / n)
            : 0.0;
    rep.mean_g.resize(static_cast<std::size_t>(I));
    rep.stderr_g.resize(static_cast<std::size_t>(I));
    for (int i = 0; i < I; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double mg = sum_g[ii] / n;
        rep.mean_g[ii] = mg;
        rep.stderr_g[ii] =
            opt.paths > 1
                ? std::sqrt(std::max(0.0, (sum_g2[ii] - n * mg * mg) / (n - 1.0)) / n)
                : 0.0;
    }
    Vec zeros(static_cast<std::size_t>(I), 0.0);
    rep.field_value = f.evaluate(opt.x0, opt.s0, zeros.data());
    rep.trunc_bound = std::pow(m.beta, T) * f.lipschitz;
    rep.cache_entries = static_cast<long>(cache.size());

    // fold groups into per (t, i) rows
    std::map<std::pair<int, int>, CondRow> rows;
    double worst_adj = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& [key, acc] : groups) {
        std::int32_t t32 = 0;
        std::memcpy(&t32, key.data(), 4);
        const int t = t32;
        for (int i = 0; i < I; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            auto& row = rows[{t, i}];
            row.t = t;
            row.i = i;
            if (acc.n < opt.cond_min_samples) {
                ++row.excluded;
                continue;
            }
            ++row.groups;
            const double mean = acc.sum[ii] / static_cast<double>(acc.n);
            const double var =
                acc.n > 1 ? std::max(0.0, (acc.sum2[ii] - acc.n * mean * mean) / (acc.n - 1.0))
                          : 0.0;
            const double se = std::sqrt(var / static_cast<double>(acc.n));
            double trunc;
            if (m.horizon[ii] == Horizon::infinite)
                trunc = std::pow(m.beta, T - t) * gabs_i[ii] / (1.0 - m.beta);
            else
                trunc = t + 1 < T ? 0.0 : m.beta * gabs_i[ii];
            const double adj = mean + trunc + 3.0 * se;
            if (row.groups == 1 || mean < row.worst_mean) row.worst_mean = mean;
            if (row.groups == 1 || adj < row.worst_adj) row.worst_adj = adj;
            if (adj < worst_adj) worst_adj = adj;
            any = true;
        }
    }
    for (auto& [k, row] : rows) rep.rows.push_back(row);
    rep.cond_worst = any ? worst_adj : 0.0;
    return rep;
}

} // namespace recdual
