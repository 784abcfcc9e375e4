#include "recdual/inner_solver.hpp"

#include "recdual/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace recdual {

double InnerProblem::value(const double* lam) const {
    const std::size_t g_count = groups();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < g_count; ++g) {
        const std::size_t b = group_begin[g];
        const std::size_t e = group_begin[g + 1];
        double m;
        if (dim == 1) {
            m = kernels::affine_max(constant.data() + b, slope.data() + b, e - b, lam[0]);
        } else {
            m = -std::numeric_limits<double>::infinity();
            for (std::size_t i = b; i < e; ++i) {
                double v = constant[i];
                const double* row = slope.data() + i * static_cast<std::size_t>(dim);
                for (int d = 0; d < dim; ++d) v += lam[d] * row[d];
                m = std::max(m, v);
            }
        }
        m += group_value[g](lam);
        best = std::max(best, m);
    }
    return best;
}

InnerProblem::Detail InnerProblem::evaluate(const double* lam, double tie_tol) const {
    const std::size_t n = size();
    Vec per_action(n);
    const std::size_t g_count = groups();
    for (std::size_t g = 0; g < g_count; ++g) {
        const double cont = group_value[g](lam);
        for (std::size_t i = group_begin[g]; i < group_begin[g + 1]; ++i) {
            double v = constant[i] + cont;
            const double* row = slope.data() + i * static_cast<std::size_t>(dim);
            for (int d = 0; d < dim; ++d) v += lam[d] * row[d];
            per_action[i] = v;
        }
    }
    Detail out;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (per_action[i] > per_action[best]) best = i;
    out.value = per_action[best];
    out.argmax_local = static_cast<int>(best);
    const double cut = out.value - tie_tol * (1.0 + std::fabs(out.value));
    for (std::size_t i = 0; i < n; ++i)
        if (per_action[i] >= cut) out.ties.push_back(action_id[i]);

    out.subgrad.assign(static_cast<std::size_t>(dim), 0.0);
    const double* row = slope.data() + best * static_cast<std::size_t>(dim);
    for (int d = 0; d < dim; ++d) out.subgrad[d] = row[d];
    // group subgradient of the argmax's group
    std::size_t g_best = 0;
    while (group_begin[g_best + 1] <= best) ++g_best;
    Vec gsub(static_cast<std::size_t>(dim), 0.0);
    group_subgrad[g_best](lam, gsub.data());
    for (int d = 0; d < dim; ++d) out.subgrad[d] += gsub[d];
    return out;
}

std::pair<double, double> golden_min(const std::function<double(double)>& f, double lo, double hi,
                                     double tol, int max_iter, int* evals) {
    const double invphi = 0.6180339887498949;
    const double invphi2 = 1.0 - invphi;
    int ne = 0;
    double a = lo, b = hi;
    double x1 = a + invphi2 * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    ne += 2;
    for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + invphi2 * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
        ++ne;
    }
    double xm = 0.5 * (a + b);
    double fm = f(xm);
    ++ne;
    // keep the best of the three probes
    if (f1 < fm && f1 <= f2) {
        xm = x1;
        fm = f1;
    } else if (f2 < fm) {
        xm = x2;
        fm = f2;
    }
    if (evals) *evals += ne;
    return {xm, fm};
}

InnerResult subgrad_min(const std::function<double(const double*)>& f,
                        const std::function<void(const double*, double*)>& sub, int dim, double hi,
                        int iters, double sigma0, const Vec* start) {
    Vec lam(static_cast<std::size_t>(dim), 0.0);
    if (start) {
        lam = *start;
        for (auto& v : lam) v = std::clamp(v, 0.0, hi);
    }
    Vec grad(static_cast<std::size_t>(dim), 0.0);
    InnerResult best;
    best.lambda = lam;
    best.value = f(lam.data());
    best.evals = 1;
    const double scale = sigma0;
    for (int k = 1; k <= iters; ++k) {
        sub(lam.data(), grad.data());
        double gnorm = 0.0;
        for (int d = 0; d < dim; ++d) gnorm += grad[d] * grad[d];
        gnorm = std::sqrt(gnorm);
        if (gnorm == 0.0) {
            double v = f(lam.data());
            ++best.evals;
            if (v < best.value) {
                best.value = v;
                best.lambda = lam;
            }
            break;
        }
        const double step = scale / (static_cast<double>(k) * gnorm);
        for (int d = 0; d < dim; ++d) lam[d] = std::clamp(lam[d] - step * grad[d], 0.0, hi);
        double v = f(lam.data());
        ++best.evals;
        if (v < best.value) {
            best.value = v;
            best.lambda = lam;
        }
    }
    // projected-subgradient residual at the best point
    sub(best.lambda.data(), grad.data());
    double res = 0.0;
    for (int d = 0; d < dim; ++d) {
        double moved = std::clamp(best.lambda[d] - grad[d], 0.0, hi);
        res = std::max(res, std::fabs(best.lambda[d] - moved));
    }
    best.kkt = res;
    for (int d = 0; d < dim; ++d)
        if (best.lambda[d] >= hi * (1.0 - 1e-12)) best.boundary = true;
    return best;
}

InnerResult minimize_inner(const InnerProblem& p, const InnerOptions& opt) {
    if (p.dim < 1) throw std::invalid_argument("minimize_inner: dim must be >= 1");
    if (p.dim == 1) {
        InnerResult out;
        auto f = [&](double x) { return p.value(&x); };
        const double tol = opt.tol_lambda * (1.0 + p.lambda_max);
        double lo = 0.0, hi = p.lambda_max;
        int evals = 0;
        // Optional warm start: try a small bracket around the hint first and
        // accept it only when the midpoint certifies an interior minimum
        // (valid for convex objectives).
        if (opt.warm_hint >= 0.0 && p.lambda_max > 0.0) {
            double w = std::max(0.02 * p.lambda_max, 8.0 * tol);
            for (int tries = 0; tries < 3; ++tries) {
                double a = std::max(0.0, opt.warm_hint - w);
                double b = std::min(p.lambda_max, opt.warm_hint + w);
                double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
                evals += 3;
                const bool left_open = a > 0.0 && fa < fm;
                const bool right_open = b < p.lambda_max && fb < fm;
                if (!left_open && !right_open) {
                    lo = a;
                    hi = b;
                    break;
                }
                w *= 8.0;
            }
        }
        auto [x, fx] = golden_min(f, lo, hi, tol, opt.max_golden_iter, &evals);
        out.lambda = {x};
        out.value = fx;
        out.evals = evals;
        out.boundary = x >= p.lambda_max - 2.0 * tol;
        // Stationarity residual from the two one-sided slopes. At a kink the
        // subdifferential spans [left, right]; the point is box-stationary
        // when that interval brackets zero (faces relax the outward side).
        // The step is a few times the bracket tolerance so a kink localized
        // by the search always falls strictly inside [x - h, x + h].
        const double h = std::max(4.0 * tol, 1e-12);
        double left = -std::numeric_limits<double>::infinity();
        double right = std::numeric_limits<double>::infinity();
        if (x - h >= 0.0) {
            left = (fx - f(x - h)) / h;
            out.evals += 1;
        }
        if (x + h <= p.lambda_max) {
            right = (f(x + h) - fx) / h;
            out.evals += 1;
        }
        double slope = 0.0;
        if (left > 0.0) slope = left;        // descent available to the left
        else if (right < 0.0) slope = right; // descent available to the right
        double moved = std::clamp(x - slope, 0.0, p.lambda_max);
        out.kkt = std::fabs(x - moved);
        return out;
    }
    auto f = [&](const double* x) { return p.value(x); };
    auto sub = [&](const double* x, double* g) {
        auto d = p.evaluate(x);
        std::copy(d.subgrad.begin(), d.subgrad.end(), g);
    };
    return subgrad_min(f, sub, p.dim, p.lambda_max, opt.subgrad_iters, opt.subgrad_sigma0,
                       nullptr);
}

} // namespace recdual
