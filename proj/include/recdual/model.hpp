#pragma once
// Finite stochastic decision environment with forward-looking constraints.
//
// Data: shock set of size S with a strictly positive row-stochastic transition
// matrix, physical states X, actions A, discount beta in (0,1), a reward table
// r[x][a][s], and I constraint tables g_i[x][a][s] with thresholds
// gbar_i[x][a][s]. Each constraint carries a horizon: "inf" means the
// discounted tail sum of g_i from every date onward must reach the threshold;
// "1" means only the current period plus one discounted look-ahead period
// count. A feasibility mask restricts the action set per (x, s) and
// zeta[x][a][s] gives the deterministic successor state.
//
// Model file format (text, '#' starts a full-line comment, reals use '.'):
//
//   [meta]
//   beta = <real in (0,1)>
//   shocks = S
//   states = X
//   actions = A
//   constraints = I
//
//   [transition]      S lines with S reals each (rows sum to 1, entries > 0)
//   [reward]          X*A lines (x-major, then a) with S reals each
//   [constraint k]    same shape as [reward], k = 0..I-1
//   [threshold k]     same shape as [reward]
//   [horizon k]       one token: "inf" or "1"
//   [feasible]        X*A lines with S entries, each 0 or 1
//   [zeta]            X*A lines with S state indices
//
// save_model followed by load_model reproduces the ModelSpec bit-exactly.

#include <cstdint>
#include <string>
#include <vector>

namespace recdual {

using Vec = std::vector<double>;

enum class Horizon : uint8_t {
    two_period = 0, // current period + one discounted look-ahead, then the multiplier resets
    infinite = 1,   // discounted tail sum at every date, multipliers accumulate
};

struct ModelSpec {
    int n_shocks = 0;      // S
    int n_states = 0;      // X
    int n_actions = 0;     // A
    int n_constraints = 0; // I
    double beta = 0.0;

    Vec transition;                // S*S, row-major
    Vec reward;                    // X*A*S
    std::vector<Vec> g;            // I tables of X*A*S
    std::vector<Vec> gbar;         // I tables of X*A*S
    std::vector<Horizon> horizon;  // per constraint
    std::vector<uint8_t> feasible; // X*A*S, 0/1
    std::vector<int> next_state;   // X*A*S

    std::size_t idx(int x, int a, int s) const {
        return (static_cast<std::size_t>(x) * n_actions + a) * n_shocks + s;
    }
    std::size_t table_size() const {
        return static_cast<std::size_t>(n_states) * n_actions * n_shocks;
    }
    double pi(int s_from, int s_to) const {
        return transition[static_cast<std::size_t>(s_from) * n_shocks + s_to];
    }
    bool all_infinite_horizon() const {
        for (Horizon h : horizon)
            if (h != Horizon::infinite) return false;
        return true;
    }
};

// Nonnegative multiplier vector (one entry per constraint).
using MultiplierVector = Vec;

// Structural checks: shapes, beta in (0,1), transition strictly positive and
// row-stochastic, zeta indices in range, every (x, s) has a feasible action,
// and every state reachable from state 0 (forward closure over feasible
// actions and positive-probability shocks) satisfies the same. Returns a list
// of human-readable violations; empty means the model is usable.
std::vector<std::string> validate(const ModelSpec& m);

// (max |r| + sum_i max |g_i|) / (1 - beta), over feasible entries.
double lipschitz_bound(const ModelSpec& m);

// Actions allowed at (x, s).
std::vector<int> feasible_actions(const ModelSpec& m, int x, int s);

ModelSpec load_model(const std::string& path);
void save_model(const ModelSpec& m, const std::string& path);

// In-memory variants used by tests and the loader.
ModelSpec parse_model(const std::string& text, const std::string& origin = "<string>");
std::string serialize_model(const ModelSpec& m);

} // namespace recdual
