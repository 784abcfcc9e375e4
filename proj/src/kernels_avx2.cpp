// AVX2 kernel variants. Only compiled with vector code when the build enables
// RECDUAL_HAVE_AVX2 (see CMakeLists); otherwise these entry points fall back
// to the scalar reference so the symbols always exist.
//
// The vector code mirrors the scalar operation sequence (mul, add, sqrt, div
// as separate roundings, no FMA) and max is an exact reduction, so results
// are bit-identical with the scalar kernels.

#include "recdual/kernels.hpp"

#include <cmath>
#include <limits>

#if defined(RECDUAL_HAVE_AVX2)
#include <immintrin.h>
#endif

namespace recdual::kernels {

#if defined(RECDUAL_HAVE_AVX2)

double affine_max_avx2(const double* base, const double* slope, std::size_t n, double lam) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d vlam = _mm256_set1_pd(lam);
        __m256d vbest = _mm256_set1_pd(best);
        for (; i + 4 <= n; i += 4) {
            __m256d b = _mm256_loadu_pd(base + i);
            __m256d s = _mm256_loadu_pd(slope + i);
            __m256d v = _mm256_add_pd(b, _mm256_mul_pd(vlam, s));
            vbest = _mm256_max_pd(vbest, v);
        }
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, vbest);
        for (double lv : lanes)
            if (lv > best) best = lv;
    }
    for (; i < n; ++i) {
        double v = base[i] + lam * slope[i];
        if (v > best) best = v;
    }
    return best;
}

void h_batch_avx2(const double* ell, double* out, std::size_t n) {
    std::size_t i = 0;
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    for (; i + 4 <= n; i += 4) {
        __m256d l = _mm256_loadu_pd(ell + i);
        __m256d u = _mm256_sub_pd(one, l);
        __m256d s = _mm256_sqrt_pd(u);
        __m256d m = _mm256_mul_pd(two, s);
        __m256d q = _mm256_div_pd(l, m);
        _mm256_storeu_pd(out + i, _mm256_sub_pd(one, q));
    }
    if (i < n) h_batch_scalar(ell + i, out + i, n - i);
}

void f_batch_avx2(const double* ell, double g, double* out, std::size_t n) {
    std::size_t i = 0;
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d vg = _mm256_set1_pd(g);
    for (; i + 4 <= n; i += 4) {
        __m256d l = _mm256_loadu_pd(ell + i);
        __m256d u = _mm256_sub_pd(one, l);
        __m256d s = _mm256_sqrt_pd(u);
        __m256d m = _mm256_mul_pd(two, s);
        __m256d q = _mm256_div_pd(l, m);
        __m256d h = _mm256_sub_pd(one, q);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_sub_pd(l, vg), h));
    }
    if (i < n) f_batch_scalar(ell + i, g, out + i, n - i);
}

#else

double affine_max_avx2(const double* base, const double* slope, std::size_t n, double lam) {
    return affine_max_scalar(base, slope, n, lam);
}

void h_batch_avx2(const double* ell, double* out, std::size_t n) { h_batch_scalar(ell, out, n); }

void f_batch_avx2(const double* ell, double g, double* out, std::size_t n) {
    f_batch_scalar(ell, g, out, n);
}

#endif

} // namespace recdual::kernels
