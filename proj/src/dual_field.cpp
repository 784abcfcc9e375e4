#include "recdual/dual_field.hpp"

#include "recdual/text_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "field serialization assumes a little-endian host");

namespace recdual {

const char* variant_name(Variant v) { return v == Variant::infsup ? "infsup" : "supinf"; }

std::size_t GammaGrid::nodes() const {
    std::size_t n = 1;
    for (const auto& k : knots) n *= k.size();
    return n;
}

std::size_t GammaGrid::index(const int* coords) const {
    std::size_t idx = 0;
    for (int d = 0; d < dim(); ++d) idx = idx * count(d) + static_cast<std::size_t>(coords[d]);
    return idx;
}

void GammaGrid::coords(std::size_t node, int* out) const {
    for (int d = dim() - 1; d >= 0; --d) {
        out[d] = static_cast<int>(node % count(d));
        node /= count(d);
    }
}

Vec GammaGrid::point(std::size_t node) const {
    std::vector<int> c(static_cast<std::size_t>(dim()));
    coords(node, c.data());
    Vec p(static_cast<std::size_t>(dim()));
    for (int d = 0; d < dim(); ++d) p[static_cast<std::size_t>(d)] = knots[d][c[d]];
    return p;
}

Vec build_axis(double gamma_max, int n, GridKind kind, const Vec& anchors) {
    if (!(gamma_max > 0.0)) throw std::invalid_argument("build_axis: gamma_max must be positive");
    if (n < 2) throw std::invalid_argument("build_axis: need at least 2 knots");
    Vec k;
    k.push_back(0.0);
    if (kind == GridKind::uniform) {
        for (int j = 1; j < n; ++j) k.push_back(gamma_max * j / (n - 1));
    } else {
        const int n_geo = std::max(2, n / 3);
        const double lo = gamma_max * 1e-3;
        const double hi = gamma_max * 0.25;
        const double ratio = std::pow(hi / lo, 1.0 / (n_geo - 1));
        double v = lo;
        for (int j = 0; j < n_geo; ++j, v *= ratio) k.push_back(v);
        const int n_uni = n - 1 - n_geo;
        for (int j = 1; j <= n_uni; ++j) k.push_back(hi + (gamma_max - hi) * j / n_uni);
    }
    for (double a : anchors) {
        if (a < 0.0 || a > gamma_max) continue;
        k.push_back(a);
    }
    std::sort(k.begin(), k.end());
    // drop near-duplicates (absolute scale set by gamma_max)
    Vec out;
    for (double v : k)
        if (out.empty() || v - out.back() > 1e-12 * (1.0 + gamma_max)) out.push_back(v);
    if (out.back() < gamma_max) out.push_back(gamma_max);
    return out;
}

GammaGrid build_grid(int dim, double gamma_max, int n, GridKind kind, const Vec& anchors) {
    GammaGrid g;
    Vec axis = build_axis(gamma_max, n, kind, anchors);
    g.knots.assign(static_cast<std::size_t>(dim), axis);
    return g;
}

namespace {

// locate the cell [knots[j], knots[j+1]] containing t (t already clamped)
inline std::size_t find_cell(const Vec& knots, double t) {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    std::size_t j = static_cast<std::size_t>(it - knots.begin());
    if (j == 0) return 0;
    if (j >= knots.size()) return knots.size() - 2;
    return j - 1;
}

} // namespace

double DualValueField::evaluate(int x, int s, const double* gamma) const {
    const int I = grid.dim();
    const std::size_t base = (static_cast<std::size_t>(x) * n_shocks + s) * nodes();
    double outside = 0.0; // l1 distance to the box
    if (I == 1) {
        const Vec& k = grid.knots[0];
        double t = gamma[0];
        if (t < k.front()) {
            outside = k.front() - t;
            t = k.front();
        } else if (t > k.back()) {
            outside = t - k.back();
            t = k.back();
        }
        const std::size_t j = find_cell(k, t);
        const double w = (t - k[j]) / (k[j + 1] - k[j]);
        const double v =
            values[base + j] + w * (values[base + j + 1] - values[base + j]);
        return v + lipschitz * outside;
    }
    // general multilinear interpolation
    std::vector<std::size_t> cell(static_cast<std::size_t>(I));
    Vec w(static_cast<std::size_t>(I));
    for (int d = 0; d < I; ++d) {
        const Vec& k = grid.knots[static_cast<std::size_t>(d)];
        double t = gamma[d];
        if (t < k.front()) {
            outside += k.front() - t;
            t = k.front();
        } else if (t > k.back()) {
            outside += t - k.back();
            t = k.back();
        }
        cell[static_cast<std::size_t>(d)] = find_cell(k, t);
        const std::size_t j = cell[static_cast<std::size_t>(d)];
        w[static_cast<std::size_t>(d)] = (t - k[j]) / (k[j + 1] - k[j]);
    }
    double v = 0.0;
    const std::size_t corners = static_cast<std::size_t>(1) << I;
    std::vector<int> coords(static_cast<std::size_t>(I));
    for (std::size_t c = 0; c < corners; ++c) {
        double weight = 1.0;
        for (int d = 0; d < I; ++d) {
            const bool upper = (c >> d) & 1u;
            weight *= upper ? w[static_cast<std::size_t>(d)] : 1.0 - w[static_cast<std::size_t>(d)];
            coords[static_cast<std::size_t>(d)] =
                static_cast<int>(cell[static_cast<std::size_t>(d)]) + (upper ? 1 : 0);
        }
        if (weight != 0.0) v += weight * values[base + grid.index(coords.data())];
    }
    return v + lipschitz * outside;
}

Vec DualValueField::subgradient(int x, int s, const double* gamma) const {
    const int I = grid.dim();
    const std::size_t base = (static_cast<std::size_t>(x) * n_shocks + s) * nodes();
    std::vector<std::size_t> cell(static_cast<std::size_t>(I));
    Vec w(static_cast<std::size_t>(I));
    std::vector<int> side(static_cast<std::size_t>(I), 0); // -1 below box, +1 above
    for (int d = 0; d < I; ++d) {
        const std::size_t dd = static_cast<std::size_t>(d);
        const Vec& k = grid.knots[dd];
        double t = gamma[d];
        if (t < k.front()) {
            side[dd] = -1;
            t = k.front();
        } else if (t > k.back()) {
            side[dd] = 1;
            t = k.back();
        }
        cell[dd] = find_cell(k, t);
        w[dd] = (t - k[cell[dd]]) / (k[cell[dd] + 1] - k[cell[dd]]);
    }
    Vec out(static_cast<std::size_t>(I), 0.0);
    std::vector<int> coords(static_cast<std::size_t>(I));
    const std::size_t corners = static_cast<std::size_t>(1) << I;
    for (std::size_t c = 0; c < corners; ++c) {
        for (int d = 0; d < I; ++d) {
            const std::size_t dd = static_cast<std::size_t>(d);
            coords[dd] = static_cast<int>(cell[dd]) + (((c >> d) & 1u) ? 1 : 0);
        }
        const double v = values[base + grid.index(coords.data())];
        for (int d = 0; d < I; ++d) {
            const std::size_t dd = static_cast<std::size_t>(d);
            double wd = 1.0; // product of the off-axis interpolation weights
            for (int e = 0; e < I; ++e) {
                if (e == d) continue;
                const std::size_t ee = static_cast<std::size_t>(e);
                wd *= ((c >> e) & 1u) ? w[ee] : 1.0 - w[ee];
            }
            const Vec& k = grid.knots[dd];
            const double width = k[cell[dd] + 1] - k[cell[dd]];
            out[dd] += (((c >> d) & 1u) ? wd : -wd) * v / width;
        }
    }
    for (int d = 0; d < I; ++d)
        if (side[static_cast<std::size_t>(d)] != 0)
            out[static_cast<std::size_t>(d)] = side[static_cast<std::size_t>(d)] * lipschitz;
    return out;
}

DualValueField init_affine_majorant(const ModelSpec& m, Variant variant, GammaGrid grid) {
    DualValueField f;
    f.variant = variant;
    f.n_states = m.n_states;
    f.n_shocks = m.n_shocks;
    f.n_constraints = m.n_constraints;
    f.beta = m.beta;
    f.lipschitz = lipschitz_bound(m);
    f.horizon = m.horizon;
    f.grid = std::move(grid);
    const std::size_t nn = f.grid.nodes();
    f.values.assign(static_cast<std::size_t>(m.n_states) * m.n_shocks * nn, 0.0);
    for (std::size_t node = 0; node < nn; ++node) {
        Vec p = f.grid.point(node);
        double sum = 0.0;
        for (double v : p) sum += v;
        const double cap = (1.0 + sum) * f.lipschitz;
        for (int x = 0; x < m.n_states; ++x)
            for (int s = 0; s < m.n_shocks; ++s) f.at(x, s, node) = cap;
    }
    return f;
}

namespace {

void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}
template <class T> void put(std::string& out, T v) { put_bytes(out, &v, sizeof v); }

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    explicit Reader(const std::string& b) : buf(b) {}
    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("field file truncated");
    }
    template <class T> T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof v);
        pos += sizeof v;
        return v;
    }
    void get_doubles(double* p, std::size_t n) {
        need(n * sizeof(double));
        std::memcpy(p, buf.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
    }
};

constexpr char kMagic[8] = {'R', 'D', 'V', 'F', 'L', 'D', '0', '1'};

} // namespace

void save_field(const DualValueField& f, const std::string& path) {
    std::string out;
    out.reserve(64 + f.values.size() * 8);
    put_bytes(out, kMagic, 8);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.variant));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.n_states));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.n_shocks));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.n_constraints));
    put<double>(out, f.beta);
    put<double>(out, f.lipschitz);
    for (int i = 0; i < f.n_constraints; ++i)
        put<std::uint8_t>(out, static_cast<std::uint8_t>(f.horizon[static_cast<std::size_t>(i)]));
    for (int d = 0; d < f.grid.dim(); ++d) {
        const Vec& k = f.grid.knots[static_cast<std::size_t>(d)];
        put<std::uint64_t>(out, k.size());
        put_bytes(out, k.data(), k.size() * sizeof(double));
    }
    put_bytes(out, f.values.data(), f.values.size() * sizeof(double));
    write_file(path, out);
}

DualValueField load_field(const std::string& path) {
    const std::string buf = read_file(path);
    Reader r(buf);
    r.need(8);
    if (std::memcmp(buf.data(), kMagic, 8) != 0) throw IoError(path + ": not a field file");
    r.pos = 8;
    DualValueField f;
    const auto variant = r.get<std::uint32_t>();
    if (variant > 1) throw IoError(path + ": bad variant flag");
    f.variant = static_cast<Variant>(variant);
    f.n_states = static_cast<int>(r.get<std::uint32_t>());
    f.n_shocks = static_cast<int>(r.get<std::uint32_t>());
    f.n_constraints = static_cast<int>(r.get<std::uint32_t>());
    if (f.n_states <= 0 || f.n_shocks <= 0 || f.n_constraints <= 0 || f.n_constraints > 64)
        throw IoError(path + ": bad field header");
    f.beta = r.get<double>();
    f.lipschitz = r.get<double>();
    f.horizon.resize(static_cast<std::size_t>(f.n_constraints));
    for (int i = 0; i < f.n_constraints; ++i) {
        const auto h = r.get<std::uint8_t>();
        if (h > 1) throw IoError(path + ": bad horizon flag");
        f.horizon[static_cast<std::size_t>(i)] = static_cast<Horizon>(h);
    }
    f.grid.knots.resize(static_cast<std::size_t>(f.n_constraints));
    for (int d = 0; d < f.n_constraints; ++d) {
        const auto cnt = r.get<std::uint64_t>();
        if (cnt < 2 || cnt > (1u << 24)) throw IoError(path + ": bad knot count");
        Vec k(static_cast<std::size_t>(cnt));
        r.get_doubles(k.data(), k.size());
        if (k.front() != 0.0) throw IoError(path + ": knots must start at 0");
        for (std::size_t j = 1; j < k.size(); ++j)
            if (!(k[j] > k[j - 1])) throw IoError(path + ": knots must be ascending");
        f.grid.knots[static_cast<std::size_t>(d)] = std::move(k);
    }
    const std::size_t expect =
        static_cast<std::size_t>(f.n_states) * f.n_shocks * f.grid.nodes();
    f.values.resize(expect);
    r.get_doubles(f.values.data(), expect);
    if (r.pos != buf.size()) throw IoError(path + ": trailing bytes");
    return f;
}

InvariantReport check_invariants(const DualValueField& f, const std::vector<PayoffTuple>& tuples) {
    InvariantReport rep;
    const int I = f.grid.dim();
    const std::size_t nn = f.grid.nodes();
    std::vector<int> c(static_cast<std::size_t>(I));
    for (int x = 0; x < f.n_states; ++x) {
        for (int s = 0; s < f.n_shocks; ++s) {
            for (std::size_t node = 0; node < nn; ++node) {
                f.grid.coords(node, c.data());
                const double v = f.at(x, s, node);
                // upper bound
                double gsum = 0.0;
                for (int d = 0; d < I; ++d) gsum += f.grid.knots[static_cast<std::size_t>(d)][c[d]];
                rep.upper_violation =
                    std::max(rep.upper_violation, v - (1.0 + gsum) * f.lipschitz);
                // per-axis checks against the next knot(s)
                for (int d = 0; d < I; ++d) {
                    const Vec& k = f.grid.knots[static_cast<std::size_t>(d)];
                    const int j = c[d];
                    if (j + 1 < static_cast<int>(k.size())) {
                        c[d] = j + 1;
                        const double v1 = f.at(x, s, f.grid.index(c.data()));
                        rep.lipschitz_violation =
                            std::max(rep.lipschitz_violation,
                                     std::fabs(v1 - v) - f.lipschitz * (k[j + 1] - k[j]));
                        if (j + 2 < static_cast<int>(k.size())) {
                            c[d] = j + 2;
                            const double v2 = f.at(x, s, f.grid.index(c.data()));
                            const double t0 = k[j], t1 = k[j + 1], t2 = k[j + 2];
                            const double chord =
                                ((t2 - t1) * v + (t1 - t0) * v2) / (t2 - t0);
                            rep.convexity_violation =
                                std::max(rep.convexity_violation, v1 - chord);
                        }
                        c[d] = j;
                    }
                }
            }
        }
    }
    for (const auto& t : tuples) {
        for (std::size_t node = 0; node < nn; ++node) {
            Vec p = f.grid.point(node);
            double low = t.v0;
            for (int d = 0; d < I; ++d)
                low += p[static_cast<std::size_t>(d)] * t.vi[static_cast<std::size_t>(d)];
            rep.lower_violation =
                std::max(rep.lower_violation, low - f.at(t.x, t.s, node));
        }
    }
    return rep;
}

} // namespace recdual
