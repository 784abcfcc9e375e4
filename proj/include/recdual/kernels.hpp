#pragma once
// Data-parallel inner-loop kernels with a scalar reference implementation and
// an AVX2 variant selected at runtime. Both variants use the same operation
// sequence (multiply then add, no fused contraction; IEEE sqrt/div), so their
// results are bit-identical and the equivalence tests can demand exact
// agreement.
//
// Kernels covered:
//   affine_max  max_i (base[i] + lam * slope[i]) - the per-multiplier bracket
//               reduction over actions inside the inner minimization
//   h_batch     h(l) = 1 - l / (2 sqrt(1 - l)) over an array
//   f_batch     f(l; g) = (l - g) * h(l) over an array
//
// Set RECDUAL_NO_SIMD=1 in the environment to force the scalar path.

#include <cstddef>

namespace recdual::kernels {

enum class Isa { scalar = 0, avx2 = 1 };

// The variant picked at process start (cpuid + RECDUAL_NO_SIMD override).
Isa active_isa();
const char* isa_name(Isa isa);

// True when the AVX2 variant was compiled in and the CPU supports it.
bool avx2_available();

// Dispatched entry points.
double affine_max(const double* base, const double* slope, std::size_t n, double lam);
void h_batch(const double* ell, double* out, std::size_t n);
void f_batch(const double* ell, double g, double* out, std::size_t n);

// Direct access to each implementation, for equivalence tests.
double affine_max_scalar(const double* base, const double* slope, std::size_t n, double lam);
void h_batch_scalar(const double* ell, double* out, std::size_t n);
void f_batch_scalar(const double* ell, double g, double* out, std::size_t n);

double affine_max_avx2(const double* base, const double* slope, std::size_t n, double lam);
void h_batch_avx2(const double* ell, double* out, std::size_t n);
void f_batch_avx2(const double* ell, double g, double* out, std::size_t n);

} // namespace recdual::kernels
