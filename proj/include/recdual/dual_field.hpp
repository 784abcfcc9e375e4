#pragma once
// Value field over (multiplier vector, endogenous state, shock).
//
// The field stores, for each (x, s), values on a tensor grid of nonnegative
// multiplier vectors. Evaluation between knots is multilinear; outside the
// box it is the value at the componentwise projection onto the box plus
// lipschitz * (l1 distance to the box), which preserves convexity and the
// Lipschitz bound and never underestimates a Lipschitz-majorized function.
//
// Binary file format (little-endian, fixed layout):
//   magic   8 bytes  "RDVFLD01"
//   u32     variant (0 = infsup, 1 = supinf)
//   u32     n_states, n_shocks, n_constraints
//   f64     beta, lipschitz
//   u8[I]   horizon flags (0 = two_period, 1 = infinite)
//   per dimension d in 0..I-1:  u64 count, f64[count] knots (ascending, knots[0] == 0)
//   f64[X*S*nodes] values, node index fastest, laid out (x*S + s)*nodes + node
// where nodes = product of per-dimension counts and node ordering is
// row-major with the last dimension fastest.

#include "recdual/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace recdual {

enum class Variant : std::uint8_t { infsup = 0, supinf = 1 };

const char* variant_name(Variant v);

enum class GridKind : std::uint8_t { geometric_uniform = 0, uniform = 1 };

struct GammaGrid {
    std::vector<Vec> knots; // one ascending knot vector per dimension, first knot 0

    int dim() const { return static_cast<int>(knots.size()); }
    std::size_t count(int d) const { return knots[static_cast<std::size_t>(d)].size(); }
    std::size_t nodes() const;

    // row-major node index, last dimension fastest
    std::size_t index(const int* coords) const;
    void coords(std::size_t node, int* out) const;
    Vec point(std::size_t node) const;
    double knot_max(int d) const { return knots[static_cast<std::size_t>(d)].back(); }
};

// Builds one knot vector on [0, gamma_max] with n target knots. The default
// kind places roughly a third of the knots geometrically between
// gamma_max * 1e-3 and gamma_max / 4 (resolving curvature near the origin)
// and the rest uniformly up to gamma_max. Anchors are merged in exactly and
// may grow the count slightly.
Vec build_axis(double gamma_max, int n, GridKind kind, const Vec& anchors);
GammaGrid build_grid(int dim, double gamma_max, int n, GridKind kind, const Vec& anchors);

struct DualValueField {
    Variant variant = Variant::infsup;
    int n_states = 0;
    int n_shocks = 0;
    int n_constraints = 0;
    double beta = 0.0;
    double lipschitz = 0.0;
    std::vector<Horizon> horizon;
    GammaGrid grid;
    Vec values; // (x * n_shocks + s) * grid.nodes() + node

    std::size_t nodes() const { return grid.nodes(); }
    double& at(int x, int s, std::size_t node) {
        return values[(static_cast<std::size_t>(x) * n_shocks + s) * nodes() + node];
    }
    double at(int x, int s, std::size_t node) const {
        return values[(static_cast<std::size_t>(x) * n_shocks + s) * nodes() + node];
    }

    double evaluate(int x, int s, const double* gamma) const;
    // Exact partial slopes of the interpolant at gamma: each coordinate gets
    // the slope of the grid cell containing it (the right-hand cell when gamma
    // sits exactly on a knot), or +/- lipschitz outside the grid box. For a
    // convex field this is a genuine subgradient selection.
    Vec subgradient(int x, int s, const double* gamma) const;
};

DualValueField init_affine_majorant(const ModelSpec& m, Variant variant, GammaGrid grid);

void save_field(const DualValueField& f, const std::string& path);
DualValueField load_field(const std::string& path);

// A stationary plan's discounted payoffs, used as lower-bound witnesses.
struct PayoffTuple {
    int x = 0;
    int s = 0;
    double v0 = 0.0; // discounted objective from (x, s)
    Vec vi;          // discounted constraint payoffs from (x, s)
};

struct InvariantReport {
    double convexity_violation = 0.0; // max midpoint excess over chords, per axis
    double lipschitz_violation = 0.0; // max |dv| - L*dgamma over consecutive knots
    double upper_violation = 0.0;     // max v - (1 + sum gamma) * L
    double lower_violation = 0.0;     // max (v0 + gamma . vi) - v over supplied tuples
    bool pass(double tol) const {
        return convexity_violation <= tol && lipschitz_violation <= tol &&
               upper_violation <= tol && lower_violation <= tol;
    }
};

InvariantReport check_invariants(const DualValueField& f,
                                 const std::vector<PayoffTuple>& tuples = {});

} // namespace recdual
