// Scalar reference kernels. Compiled with -ffp-contract=off so the multiply
// and add below stay separate roundings, matching the AVX2 variant exactly.

#include "recdual/kernels.hpp"

#include <cmath>
#include <limits>

namespace recdual::kernels {

double affine_max_scalar(const double* base, const double* slope, std::size_t n, double lam) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double v = base[i] + lam * slope[i];
        if (v > best) best = v;
    }
    return best;
}

void h_batch_scalar(const double* ell, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double u = 1.0 - ell[i];
        double s = std::sqrt(u);
        double m = 2.0 * s;
        double q = ell[i] / m;
        out[i] = 1.0 - q;
    }
}

void f_batch_scalar(const double* ell, double g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double u = 1.0 - ell[i];
        double s = std::sqrt(u);
        double m = 2.0 * s;
        double q = ell[i] / m;
        double h = 1.0 - q;
        out[i] = (ell[i] - g) * h;
    }
}

} // namespace recdual::kernels
