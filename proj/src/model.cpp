#include "recdual/model.hpp"

#include "recdual/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

namespace recdual {

namespace {

bool finite_table(const Vec& t) {
    for (double v : t)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

std::vector<std::string> validate(const ModelSpec& m) {
    std::vector<std::string> bad;
    auto fail = [&](const std::string& s) { bad.push_back(s); };

    if (m.n_shocks <= 0) fail("shocks must be positive");
    if (m.n_states <= 0) fail("states must be positive");
    if (m.n_actions <= 0) fail("actions must be positive");
    if (m.n_constraints < 0) fail("constraints must be nonnegative");
    if (!(m.beta > 0.0 && m.beta < 1.0)) fail("beta must lie in (0,1)");
    if (!bad.empty()) return bad;

    const std::size_t tsz = m.table_size();
    if (m.transition.size() != static_cast<std::size_t>(m.n_shocks) * m.n_shocks)
        fail("transition has wrong shape");
    if (m.reward.size() != tsz) fail("reward has wrong shape");
    if (m.g.size() != static_cast<std::size_t>(m.n_constraints)) fail("constraint table count mismatch");
    if (m.gbar.size() != static_cast<std::size_t>(m.n_constraints)) fail("threshold table count mismatch");
    if (m.horizon.size() != static_cast<std::size_t>(m.n_constraints)) fail("horizon count mismatch");
    if (m.feasible.size() != tsz) fail("feasible mask has wrong shape");
    if (m.next_state.size() != tsz) fail("zeta has wrong shape");
    if (!bad.empty()) return bad;
    for (int i = 0; i < m.n_constraints; ++i) {
        if (m.g[i].size() != tsz) fail("constraint " + std::to_string(i) + " has wrong shape");
        if (m.gbar[i].size() != tsz) fail("threshold " + std::to_string(i) + " has wrong shape");
    }
    if (!bad.empty()) return bad;

    if (!finite_table(m.reward)) fail("reward contains non-finite entries");
    for (int i = 0; i < m.n_constraints; ++i) {
        if (!finite_table(m.g[i])) fail("constraint " + std::to_string(i) + " contains non-finite entries");
        if (!finite_table(m.gbar[i])) fail("threshold " + std::to_string(i) + " contains non-finite entries");
    }

    for (int s = 0; s < m.n_shocks; ++s) {
        double row = 0.0;
        for (int t = 0; t < m.n_shocks; ++t) {
            double p = m.pi(s, t);
            if (!(p > 0.0)) fail("transition(" + std::to_string(s) + "," + std::to_string(t) + ") must be > 0");
            row += p;
        }
        if (std::abs(row - 1.0) > 1e-12)
            fail("transition row " + std::to_string(s) + " sums to " + format_double(row));
    }

    for (int x = 0; x < m.n_states; ++x)
        for (int a = 0; a < m.n_actions; ++a)
            for (int s = 0; s < m.n_shocks; ++s) {
                int nx = m.next_state[m.idx(x, a, s)];
                if (nx < 0 || nx >= m.n_states)
                    fail("zeta(" + std::to_string(x) + "," + std::to_string(a) + "," +
                         std::to_string(s) + ") out of range");
                uint8_t fb = m.feasible[m.idx(x, a, s)];
                if (fb != 0 && fb != 1)
                    fail("feasible mask entries must be 0 or 1");
            }
    if (!bad.empty()) return bad;

    // Forward reachability from state 0 under any shock: every reachable
    // (x, s) needs at least one feasible action, otherwise the process can
    // paint itself into a corner.
    std::vector<char> seen(m.n_states, 0);
    std::deque<int> queue;
    seen[0] = 1;
    queue.push_back(0);
    while (!queue.empty()) {
        int x = queue.front();
        queue.pop_front();
        for (int s = 0; s < m.n_shocks; ++s) {
            bool any = false;
            for (int a = 0; a < m.n_actions; ++a) {
                if (!m.feasible[m.idx(x, a, s)]) continue;
                any = true;
                int nx = m.next_state[m.idx(x, a, s)];
                if (!seen[nx]) {
                    seen[nx] = 1;
                    queue.push_back(nx);
                }
            }
            if (!any)
                fail("no feasible action at reachable state " + std::to_string(x) + ", shock " +
                     std::to_string(s));
        }
    }
    return bad;
}

double lipschitz_bound(const ModelSpec& m) {
    auto max_abs = [&](const Vec& t) {
        double v = 0.0;
        for (int x = 0; x < m.n_states; ++x)
            for (int a = 0; a < m.n_actions; ++a)
                for (int s = 0; s < m.n_shocks; ++s)
                    if (m.feasible[m.idx(x, a, s)]) v = std::max(v, std::abs(t[m.idx(x, a, s)]));
        return v;
    };
    double total = max_abs(m.reward);
    for (int i = 0; i < m.n_constraints; ++i) total += max_abs(m.g[i]);
    return total / (1.0 - m.beta);
}

std::vector<int> feasible_actions(const ModelSpec& m, int x, int s) {
    std::vector<int> out;
    for (int a = 0; a < m.n_actions; ++a)
        if (m.feasible[m.idx(x, a, s)]) out.push_back(a);
    return out;
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

namespace {

struct Section {
    std::vector<std::vector<std::string>> rows; // tokenized non-empty lines
};

std::map<std::string, Section> split_sections(const std::string& text, const std::string& origin) {
    std::map<std::string, Section> out;
    std::istringstream is(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw IoError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            current = trim(t.substr(1, t.size() - 2));
            if (out.count(current))
                throw IoError(origin + ": duplicate section [" + current + "]");
            out[current]; // create
            continue;
        }
        if (current.empty())
            throw IoError(origin + ":" + std::to_string(lineno) + ": data before any section");
        out[current].rows.push_back(split_ws(t));
    }
    return out;
}

const Section& need(const std::map<std::string, Section>& secs, const std::string& name,
                    const std::string& origin) {
    auto it = secs.find(name);
    if (it == secs.end()) throw IoError(origin + ": missing section [" + name + "]");
    return it->second;
}

Vec read_table(const Section& sec, int rows, int cols, const std::string& what,
               const std::string& origin) {
    if (static_cast<int>(sec.rows.size()) != rows)
        throw IoError(origin + ": [" + what + "] expects " + std::to_string(rows) + " rows, got " +
                      std::to_string(sec.rows.size()));
    Vec out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (const auto& r : sec.rows) {
        if (static_cast<int>(r.size()) != cols)
            throw IoError(origin + ": [" + what + "] expects " + std::to_string(cols) +
                          " columns per row");
        for (const auto& tok : r) out.push_back(parse_double(tok));
    }
    return out;
}

std::string meta_value(const Section& meta, const std::string& key, const std::string& origin) {
    for (const auto& row : meta.rows) {
        if (row.size() >= 3 && row[0] == key && row[1] == "=") {
            if (row.size() != 3) throw IoError(origin + ": malformed meta line for " + key);
            return row[2];
        }
    }
    throw IoError(origin + ": [meta] missing key '" + key + "'");
}

} // namespace

ModelSpec parse_model(const std::string& text, const std::string& origin) {
    auto secs = split_sections(text, origin);
    const Section& meta = need(secs, "meta", origin);

    ModelSpec m;
    m.beta = parse_double(meta_value(meta, "beta", origin));
    m.n_shocks = static_cast<int>(parse_int(meta_value(meta, "shocks", origin)));
    m.n_states = static_cast<int>(parse_int(meta_value(meta, "states", origin)));
    m.n_actions = static_cast<int>(parse_int(meta_value(meta, "actions", origin)));
    m.n_constraints = static_cast<int>(parse_int(meta_value(meta, "constraints", origin)));
    if (m.n_shocks <= 0 || m.n_states <= 0 || m.n_actions <= 0 || m.n_constraints < 0)
        throw IoError(origin + ": meta counts must be positive");

    const int xa = m.n_states * m.n_actions;
    m.transition = read_table(need(secs, "transition", origin), m.n_shocks, m.n_shocks, "transition", origin);
    m.reward = read_table(need(secs, "reward", origin), xa, m.n_shocks, "reward", origin);
    for (int i = 0; i < m.n_constraints; ++i) {
        std::string cname = "constraint " + std::to_string(i);
        std::string tname = "threshold " + std::to_string(i);
        std::string hname = "horizon " + std::to_string(i);
        m.g.push_back(read_table(need(secs, cname, origin), xa, m.n_shocks, cname, origin));
        m.gbar.push_back(read_table(need(secs, tname, origin), xa, m.n_shocks, tname, origin));
        const Section& hs = need(secs, hname, origin);
        if (hs.rows.size() != 1 || hs.rows[0].size() != 1)
            throw IoError(origin + ": [" + hname + "] expects a single token");
        const std::string& tok = hs.rows[0][0];
        if (tok == "inf")
            m.horizon.push_back(Horizon::infinite);
        else if (tok == "1")
            m.horizon.push_back(Horizon::two_period);
        else
            throw IoError(origin + ": [" + hname + "] must be 'inf' or '1', got '" + tok + "'");
    }

    Vec fz = read_table(need(secs, "feasible", origin), xa, m.n_shocks, "feasible", origin);
    m.feasible.resize(fz.size());
    for (std::size_t k = 0; k < fz.size(); ++k) {
        if (fz[k] != 0.0 && fz[k] != 1.0) throw IoError(origin + ": [feasible] entries must be 0 or 1");
        m.feasible[k] = fz[k] == 1.0 ? 1 : 0;
    }
    Vec zt = read_table(need(secs, "zeta", origin), xa, m.n_shocks, "zeta", origin);
    m.next_state.resize(zt.size());
    for (std::size_t k = 0; k < zt.size(); ++k) {
        double v = zt[k];
        if (v != std::floor(v)) throw IoError(origin + ": [zeta] entries must be integers");
        m.next_state[k] = static_cast<int>(v);
    }
    return m;
}

std::string serialize_model(const ModelSpec& m) {
    std::string out;
    auto line = [&](const std::string& s) {
        out += s;
        out += '\n';
    };
    line("[meta]");
    line("beta = " + format_double(m.beta));
    line("shocks = " + std::to_string(m.n_shocks));
    line("states = " + std::to_string(m.n_states));
    line("actions = " + std::to_string(m.n_actions));
    line("constraints = " + std::to_string(m.n_constraints));

    auto emit_table = [&](const std::string& name, auto get) {
        line("");
        line("[" + name + "]");
        for (int x = 0; x < m.n_states; ++x)
            for (int a = 0; a < m.n_actions; ++a) {
                std::string row;
                for (int s = 0; s < m.n_shocks; ++s) {
                    if (s) row += ' ';
                    row += get(x, a, s);
                }
                line(row);
            }
    };

    line("");
    line("[transition]");
    for (int s = 0; s < m.n_shocks; ++s) {
        std::string row;
        for (int t = 0; t < m.n_shocks; ++t) {
            if (t) row += ' ';
            row += format_double(m.pi(s, t));
        }
        line(row);
    }

    emit_table("reward", [&](int x, int a, int s) { return format_double(m.reward[m.idx(x, a, s)]); });
    for (int i = 0; i < m.n_constraints; ++i) {
        emit_table("constraint " + std::to_string(i),
                   [&](int x, int a, int s) { return format_double(m.g[i][m.idx(x, a, s)]); });
        emit_table("threshold " + std::to_string(i),
                   [&](int x, int a, int s) { return format_double(m.gbar[i][m.idx(x, a, s)]); });
        line("");
        line("[horizon " + std::to_string(i) + "]");
        line(m.horizon[i] == Horizon::infinite ? "inf" : "1");
    }
    emit_table("feasible", [&](int x, int a, int s) {
        return std::to_string(static_cast<int>(m.feasible[m.idx(x, a, s)]));
    });
    emit_table("zeta", [&](int x, int a, int s) { return std::to_string(m.next_state[m.idx(x, a, s)]); });
    return out;
}

ModelSpec load_model(const std::string& path) { return parse_model(read_file(path), path); }

void save_model(const ModelSpec& m, const std::string& path) { write_file(path, serialize_model(m)); }

} // namespace recdual
