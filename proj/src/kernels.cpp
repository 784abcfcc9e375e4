// Runtime dispatch between the scalar reference kernels and the AVX2 variant.

#include "recdual/kernels.hpp"

#include <cstdlib>

namespace recdual::kernels {

bool avx2_available() {
#if defined(RECDUAL_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") > 0;
#else
    return false;
#endif
}

namespace {

Isa pick_isa() {
    if (const char* env = std::getenv("RECDUAL_NO_SIMD"); env && env[0] == '1')
        return Isa::scalar;
    return avx2_available() ? Isa::avx2 : Isa::scalar;
}

const Isa g_isa = pick_isa();

} // namespace

Isa active_isa() { return g_isa; }

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double affine_max(const double* base, const double* slope, std::size_t n, double lam) {
    return g_isa == Isa::avx2 ? affine_max_avx2(base, slope, n, lam)
                              : affine_max_scalar(base, slope, n, lam);
}

void h_batch(const double* ell, double* out, std::size_t n) {
    g_isa == Isa::avx2 ? h_batch_avx2(ell, out, n) : h_batch_scalar(ell, out, n);
}

void f_batch(const double* ell, double g, double* out, std::size_t n) {
    g_isa == Isa::avx2 ? f_batch_avx2(ell, g, out, n) : f_batch_scalar(ell, g, out, n);
}

} // namespace recdual::kernels
