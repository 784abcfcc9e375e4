#include "recdual/ramsey.hpp"

#include "recdual/inner_solver.hpp"
#include "recdual/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace recdual {

double ramsey_h(double ell) {
    const double u = 1.0 - ell;
    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    return 1.0 - ell / (2.0 * std::sqrt(u));
}

double ramsey_f(double ell, double g) { return (ell - g) * ramsey_h(ell); }

double ramsey_welfare_term(double ell, double g) {
    if (ell - g <= 0.0 || ell >= 1.0) return -std::numeric_limits<double>::infinity();
    return std::log(ell - g) + std::sqrt(1.0 - ell);
}

double ramsey_h_root() { return 2.0 * std::sqrt(2.0) - 2.0; }

MaxDebt max_debt(double g) {
    if (!(g >= 0.0 && g < 1.0)) throw std::invalid_argument("max_debt: g in [0, 1)");
    auto neg = [g](double ell) { return -ramsey_f(ell, g); };
    auto [ell, nv] = golden_min(neg, g, 1.0 - 1e-9, 1e-8, 300);
    return {ell, -nv};
}

LaborRoots labor_roots(double b, double g) {
    LaborRoots out;
    if (b < 0.0) return out;
    const MaxDebt peak = max_debt(g);
    if (b > peak.value) return out;
    out.ok = true;
    auto bisect = [&](double lo, double hi, bool rising) {
        // sign change of f - b over [lo, hi]
        for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
            const double mid = 0.5 * (lo + hi);
            const bool below = ramsey_f(mid, g) < b;
            if (below == rising)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    out.lo = b == 0.0 ? g : bisect(g, peak.ell, true);
    out.hi = bisect(peak.ell, 1.0 - 1e-12, false);
    return out;
}

std::vector<CurveRow> ramsey_curves(const RamseyScenario& sc, double step) {
    if (!(step > 0.0 && step < 0.5)) throw std::invalid_argument("ramsey_curves: bad step");
    std::vector<double> ells;
    for (double e = step; e < 1.0 - 0.5 * step; e += step) ells.push_back(e);
    std::vector<double> h(ells.size()), f0(ells.size()), f2(ells.size());
    kernels::h_batch(ells.data(), h.data(), ells.size());
    kernels::f_batch(ells.data(), sc.g0, f0.data(), ells.size());
    kernels::f_batch(ells.data(), sc.g2, f2.data(), ells.size());
    std::vector<CurveRow> rows(ells.size());
    for (std::size_t j = 0; j < ells.size(); ++j) {
        rows[j].ell = ells[j];
        rows[j].f_g0 = f0[j];
        rows[j].f_g2 = f2[j];
        rows[j].welfare_g0 = ramsey_welfare_term(ells[j], sc.g0);
    }
    return rows;
}

namespace {

// shared enumeration over debt, date-0 labor, date-1 branches and the
// state-1 lottery weight; visit(b, l0, pi1, roots...) receives revenue and
// welfare and decides what to keep. ell2_branch: 'L', 'H', or 'B' for both.
template <class Visit>
void enumerate_plans(const RamseyScenario& sc, bool lottery, char ell2_branch, Visit&& visit) {
    const double bstep = 1e-3, lstep = 1e-3, pstep = 1e-3;
    const double bcap = std::min(max_debt(sc.g1).value, max_debt(sc.g2).value);

    // date-0 labor tables
    std::vector<double> l0s, f0s, w0s;
    for (double l = sc.g0 + lstep; l < 1.0 - 0.5 * lstep; l += lstep) l0s.push_back(l);
    f0s.resize(l0s.size());
    kernels::f_batch(l0s.data(), sc.g0, f0s.data(), l0s.size());
    w0s.resize(l0s.size());
    for (std::size_t j = 0; j < l0s.size(); ++j) w0s[j] = ramsey_welfare_term(l0s[j], sc.g0);

    for (double b = 0.0; b <= bcap + 1e-12; b += bstep) {
        const LaborRoots r1 = labor_roots(b, sc.g1);
        const LaborRoots r2 = labor_roots(b, sc.g2);
        if (!r1.ok || !r2.ok) continue;
        const double h1[2] = {ramsey_h(r1.lo), ramsey_h(r1.hi)};
        const double w1[2] = {ramsey_welfare_term(r1.lo, sc.g1),
                              ramsey_welfare_term(r1.hi, sc.g1)};
        const double l1[2] = {r1.lo, r1.hi};
        const int br2_lo = ell2_branch == 'H' ? 1 : 0;
        const int br2_hi = ell2_branch == 'L' ? 0 : 1;
        for (int br2 = br2_lo; br2 <= br2_hi; ++br2) {
            const double l2 = br2 == 0 ? r2.lo : r2.hi;
            const double h2 = ramsey_h(l2);
            const double w2 = ramsey_welfare_term(l2, sc.g2);
            if (lottery) {
                // weight-0 legs must not poison the mix when their welfare is -inf
                auto mix = [](double p, double a, double b2) {
                    if (p <= 0.0) return b2;
                    if (p >= 1.0) return a;
                    return p * a + (1.0 - p) * b2;
                };
                const int np = static_cast<int>(std::lround(1.0 / pstep));
                for (int ip = 0; ip <= np; ++ip) {
                    const double pi = static_cast<double>(ip) / np;
                    const double eh = mix(pi, h1[0], h1[1]);
                    const double ew = mix(pi, w1[0], w1[1]);
                    const double el = mix(pi, l1[0], l1[1]);
                    const double wprime = sc.beta * (sc.p1 * eh + sc.p2 * h2);
                    const double wfut = sc.beta * (sc.p1 * ew + sc.p2 * w2);
                    for (std::size_t j = 0; j < l0s.size(); ++j) {
                        const double rev = f0s[j] + (l0s[j] - sc.g0) * wprime;
                        visit(b, l0s[j], el, l2, pi, rev, w0s[j] + wfut);
                    }
                }
            } else {
                for (int br1 = 0; br1 < 2; ++br1) {
                    const double pi = br1 == 0 ? 1.0 : 0.0; // pi1 = weight on low root
                    const double wprime = sc.beta * (sc.p1 * h1[br1] + sc.p2 * h2);
                    const double wfut = sc.beta * (sc.p1 * w1[br1] + sc.p2 * w2);
                    for (std::size_t j = 0; j < l0s.size(); ++j) {
                        const double rev = f0s[j] + (l0s[j] - sc.g0) * wprime;
                        visit(b, l0s[j], l1[br1], l2, pi, rev, w0s[j] + wfut);
                    }
                }
            }
        }
    }
}

} // namespace

std::vector<ScatterRow> ramsey_frontier(const RamseyScenario& sc, bool lottery, char ell2_branch,
                                        double bucket) {
    if (!(bucket > 0.0)) throw std::invalid_argument("ramsey_frontier: bad bucket");
    if (ell2_branch != 'L' && ell2_branch != 'H' && ell2_branch != 'B')
        throw std::invalid_argument("ramsey_frontier: branch must be L, H or B");
    std::vector<ScatterRow> best;
    std::vector<char> filled;
    enumerate_plans(sc, lottery, ell2_branch,
                    [&](double b, double l0, double el1, double l2, double pi, double rev,
                        double wf) {
                        if (!std::isfinite(wf) || !std::isfinite(rev) || rev < 0.0) return;
                        const std::size_t idx = static_cast<std::size_t>(rev / bucket);
                        if (best.size() <= idx) {
                            best.resize(idx + 1);
                            filled.resize(idx + 1, 0);
                        }
                        if (!filled[idx] || wf > best[idx].welfare) {
                            best[idx] = {b, l0, el1, l2, pi, rev, wf};
                            filled[idx] = 1;
                        }
                    });
    std::vector<ScatterRow> out;
    for (std::size_t j = 0; j < best.size(); ++j)
        if (filled[j]) out.push_back(best[j]);
    return out;
}

DominanceResult dominance_check(const RamseyScenario& sc, double b_init, double rev_tol,
                                double win_margin) {
    DominanceResult out;
    out.target = b_init;
    out.best_det = -std::numeric_limits<double>::infinity();
    out.best_lot = -std::numeric_limits<double>::infinity();
    auto keeper = [&](double& slot, bool& seen) {
        return [&slot, &seen, b_init, rev_tol](double, double, double, double, double, double rev,
                                               double wf) {
            if (!std::isfinite(wf) || std::fabs(rev - b_init) > rev_tol) return;
            seen = true;
            if (wf > slot) slot = wf;
        };
    };
    enumerate_plans(sc, false, 'B', keeper(out.best_det, out.feasible_det));
    enumerate_plans(sc, true, 'B', keeper(out.best_lot, out.feasible_lot));
    out.margin = out.best_lot - out.best_det;
    out.dominates = out.feasible_det && out.feasible_lot && out.margin > win_margin;
    return out;
}

} // namespace recdual
