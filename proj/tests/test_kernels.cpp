#include "doctest.h"

#include "recdual/kernels.hpp"
#include "recdual/rng.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

using namespace recdual;

namespace {

bool bits_equal(double a, double b) {
    unsigned long long ua = 0, ub = 0;
    std::memcpy(&ua, &a, 8);
    std::memcpy(&ub, &b, 8);
    return ua == ub;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("dispatcher reports a consistent variant") {
    const kernels::Isa isa = kernels::active_isa();
    CHECK((isa == kernels::Isa::scalar || isa == kernels::Isa::avx2));
    if (isa == kernels::Isa::avx2) CHECK(kernels::avx2_available());
    CHECK(std::string(kernels::isa_name(kernels::Isa::scalar)) == "scalar");
    CHECK(std::string(kernels::isa_name(kernels::Isa::avx2)) == "avx2");
}

TEST_CASE("affine_max scalar matches a plain loop") {
    SplitMix rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng.next() % 37;
        std::vector<double> base(n), slope(n);
        for (std::size_t i = 0; i < n; ++i) {
            base[i] = 10.0 * (rng.u01() - 0.5);
            slope[i] = 6.0 * (rng.u01() - 0.5);
        }
        const double lam = 5.0 * rng.u01();
        double want = -1e300;
        for (std::size_t i = 0; i < n; ++i) want = std::max(want, base[i] + lam * slope[i]);
        CHECK(kernels::affine_max_scalar(base.data(), slope.data(), n, lam) == want);
    }
}

TEST_CASE("scalar and avx2 variants are bit-identical") {
    if (!kernels::avx2_available()) return; // nothing to compare on this host
    SplitMix rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.next() % 41; // odd tails exercise the remainder loop
        std::vector<double> base(n), slope(n), ell(n);
        for (std::size_t i = 0; i < n; ++i) {
            base[i] = 20.0 * (rng.u01() - 0.5);
            slope[i] = 8.0 * (rng.u01() - 0.5);
            ell[i] = 0.999 * rng.u01(); // h/f domain [0, 1)
        }
        const double lam = 10.0 * rng.u01();
        CHECK(bits_equal(kernels::affine_max_scalar(base.data(), slope.data(), n, lam),
                         kernels::affine_max_avx2(base.data(), slope.data(), n, lam)));

        std::vector<double> h_s(n), h_v(n), f_s(n), f_v(n);
        kernels::h_batch_scalar(ell.data(), h_s.data(), n);
        kernels::h_batch_avx2(ell.data(), h_v.data(), n);
        kernels::f_batch_scalar(ell.data(), 0.65, f_s.data(), n);
        kernels::f_batch_avx2(ell.data(), 0.65, f_v.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(bits_equal(h_s[i], h_v[i]));
            CHECK(bits_equal(f_s[i], f_v[i]));
        }
    }
}

TEST_CASE("dispatched entry points agree with the scalar reference") {
    SplitMix rng(13);
    const std::size_t n = 23;
    std::vector<double> base(n), slope(n), ell(n);
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = rng.u01();
        slope[i] = rng.u01() - 0.5;
        ell[i] = 0.9 * rng.u01();
    }
    CHECK(bits_equal(kernels::affine_max(base.data(), slope.data(), n, 1.25),
                     kernels::affine_max_scalar(base.data(), slope.data(), n, 1.25)));
    std::vector<double> a(n), b(n);
    kernels::h_batch(ell.data(), a.data(), n);
    kernels::h_batch_scalar(ell.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(bits_equal(a[i], b[i]));
    kernels::f_batch(ell.data(), 0.1, a.data(), n);
    kernels::f_batch_scalar(ell.data(), 0.1, b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(bits_equal(a[i], b[i]));
}

TEST_CASE("h and f kernel values match the closed forms") {
    const double ells[4] = {0.0, 0.5, 0.75, 0.9};
    double h[4], f[4];
    kernels::h_batch(ells, h, 4);
    kernels::f_batch(ells, 0.5, f, 4);
    CHECK(h[0] == doctest::Approx(1.0));
    CHECK(h[2] == doctest::Approx(0.25)); // 1 - 0.75 / (2 * 0.5)
    for (int i = 0; i < 4; ++i) {
        const double want_h = 1.0 - ells[i] / (2.0 * std::sqrt(1.0 - ells[i]));
        CHECK(h[i] == doctest::Approx(want_h).epsilon(1e-15));
        CHECK(f[i] == doctest::Approx((ells[i] - 0.5) * want_h).epsilon(1e-15));
    }
    CHECK(f[1] == 0.0); // f(g; g) = 0 exactly
}

} // TEST_SUITE
