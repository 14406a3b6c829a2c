#include "gmssl/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmssl/errors.hpp"

namespace gmssl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(SolveMode mode) {
    switch (mode) {
        case SolveMode::exact: return "exact";
        case SolveMode::heuristic: return "heuristic";
        default: return "lap";
    }
}

SolveMode solve_mode_from_string(const std::string& s) {
    if (s == "exact") return SolveMode::exact;
    if (s == "heuristic") return SolveMode::heuristic;
    if (s == "lap" || s == "lap_only") return SolveMode::lap_only;
    throw ParamError("unknown solve mode: " + s);
}

std::vector<int> t_edge_lookup(const AffinitySystem& sys) {
    std::vector<int> lut(size_t(sys.n) * sys.n, -1);
    for (size_t f = 0; f < sys.edges_t.size(); ++f) {
        auto [a, b] = sys.edges_t[f];
        lut[size_t(a) * sys.n + b] = int(f);
        lut[size_t(b) * sys.n + a] = int(f);
    }
    return lut;
}

double matching_objective(const AffinitySystem& sys, std::span<const int> assignment,
                          const std::vector<int>& t_lookup) {
    double vsum = 0.0;
    for (int i = 0; i < sys.n; ++i) vsum += sys.c_v(i, assignment[i]);
    double esum = 0.0;
    for (size_t e = 0; e < sys.edges_s.size(); ++e) {
        auto [i, j] = sys.edges_s[e];
        int a = assignment[i], b = assignment[j];
        int f = t_lookup[size_t(a) * sys.n + b];
        if (f < 0) continue;
        double val = sys.c_e(int(e), f);
        esum += (a < b) ? val : -val;
    }
    return -vsum - esum;
}

double matching_objective(const AffinitySystem& sys, std::span<const int> assignment) {
    return matching_objective(sys, assignment, t_edge_lookup(sys));
}

namespace {

// Jonker-Volgenant style shortest augmenting paths; minimizes cost.
std::vector<int> lap_min(const Matrix& cost) {
    int n = cost.rows;
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j]) assign[p[j] - 1] = j - 1;
    return assign;
}

double vertex_total(const Matrix& c_v, std::span<const int> assignment) {
    double s = 0.0;
    for (int i = 0; i < c_v.rows; ++i) s += c_v(i, assignment[i]);
    return s;
}

// Maximum-affinity LAP value on the still-unassigned rows/columns.
double lap_rest_max(const Matrix& c_v, const std::vector<int>& rows, const std::vector<int>& cols) {
    int m = int(rows.size());
    if (m == 0) return 0.0;
    Matrix sub(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) sub(r, c) = -c_v(rows[r], cols[c]);
    auto a = lap_min(sub);
    double total = 0.0;
    for (int r = 0; r < m; ++r) total += c_v(rows[r], cols[a[r]]);
    return total;
}

// Re-solves with each prefix column fixed to find the lexicographically
// smallest assignment that still attains the LAP optimum (exact FP equality;
// falls back to the unrefined assignment when sums round differently).
void lex_refine_lap(const Matrix& c_v, std::vector<int>& assign) {
    int n = c_v.rows;
    double best = vertex_total(c_v, assign);
    std::vector<char> used(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < assign[i]; ++a) {
            if (used[a]) continue;
            std::vector<int> rows, cols;
            for (int r = i + 1; r < n; ++r) rows.push_back(r);
            for (int c = 0; c < n; ++c)
                if (!used[c] && c != a) cols.push_back(c);
            std::vector<int> cand(assign.begin(), assign.end());
            cand[i] = a;
            if (!rows.empty()) {
                Matrix sub(int(rows.size()), int(cols.size()));
                for (size_t r = 0; r < rows.size(); ++r)
                    for (size_t c = 0; c < cols.size(); ++c) sub(int(r), int(c)) = -c_v(rows[r], cols[c]);
                auto rest = lap_min(sub);
                for (size_t r = 0; r < rows.size(); ++r) cand[rows[r]] = cols[rest[r]];
            }
            if (vertex_total(c_v, cand) == best) {
                assign = cand;
                break;
            }
        }
        used[assign[i]] = 1;
    }
}

}  // namespace

Matching solve_lap(const Matrix& c_v) {
    if (c_v.rows != c_v.cols || c_v.rows == 0) throw ParamError("solve_lap: square matrix required");
    if (!all_finite(c_v.v)) throw ParamError("solve_lap: non-finite entries");
    Matrix cost(c_v.rows, c_v.cols);
    for (size_t i = 0; i < c_v.v.size(); ++i) cost.v[i] = -c_v.v[i];
    Matching m;
    m.assignment = lap_min(cost);
    lex_refine_lap(c_v, m.assignment);
    m.objective = -vertex_total(c_v, m.assignment);
    m.mode = SolveMode::lap_only;
    return m;
}

namespace {

struct BranchAndBound {
    const AffinitySystem& sys;
    const std::vector<int>& t_lut;
    int n;
    std::vector<double> edge_maxabs;      // per s-edge
    std::vector<double> undecided_gain;   // by depth: best possible gain of edges with j >= depth
    std::vector<std::vector<int>> edges_ending_at;  // s-edges (i,j) keyed by j
    std::vector<int> assign, best_assign;
    std::vector<char> used;
    double best = kInf;
    bool have_solution = false;

    explicit BranchAndBound(const AffinitySystem& s, const std::vector<int>& lut)
        : sys(s), t_lut(lut), n(s.n) {
        edge_maxabs.resize(sys.edges_s.size(), 0.0);
        for (size_t e = 0; e < sys.edges_s.size(); ++e)
            for (size_t f = 0; f < sys.edges_t.size(); ++f)
                edge_maxabs[e] = std::max(edge_maxabs[e], std::abs(sys.c_e(int(e), int(f))));
        undecided_gain.assign(n + 1, 0.0);
        edges_ending_at.assign(n, {});
        for (size_t e = 0; e < sys.edges_s.size(); ++e) {
            auto [i, j] = sys.edges_s[e];
            (void)i;
            edges_ending_at[j].push_back(int(e));
        }
        // edge (i,j) is decided once depth > j
        for (int d = n - 1; d >= 0; --d) {
            undecided_gain[d] = undecided_gain[d + 1];
            for (int e : edges_ending_at[d]) undecided_gain[d] += edge_maxabs[e];
        }
        assign.assign(n, -1);
        used.assign(n, 0);
    }

    // partial = -(vertex+edge affinities collected so far)
    void dfs(int depth, double partial) {
        if (depth == n) {
            double total = matching_objective(sys, assign, t_lut);
            if (total < best) {
                best = total;
                best_assign = assign;
                have_solution = true;
            }
            return;
        }
        std::vector<int> rows, cols;
        for (int r = depth; r < n; ++r) rows.push_back(r);
        for (int c = 0; c < n; ++c)
            if (!used[c]) cols.push_back(c);
        double bound = partial - lap_rest_max(sys.c_v, rows, cols) - undecided_gain[depth];
        double margin = 1e-9 * (1.0 + std::abs(best));
        if (have_solution || best < kInf) {
            if (bound >= best + margin) return;
        }
        for (int a = 0; a < n; ++a) {
            if (used[a]) continue;
            double delta = -sys.c_v(depth, a);
            for (int e : edges_ending_at[depth]) {
                int i = sys.edges_s[e].first;
                int bcol = assign[i];
                int f = t_lut[size_t(bcol) * n + a];
                if (f < 0) continue;
                double val = sys.c_e(e, f);
                delta -= (bcol < a) ? val : -val;
            }
            used[a] = 1;
            assign[depth] = a;
            dfs(depth + 1, partial + delta);
            used[a] = 0;
            assign[depth] = -1;
        }
    }
};

}  // namespace

Matching solve_exact(const AffinitySystem& sys, int node_cap) {
    if (sys.n > node_cap)
        throw CapabilityError("solve_exact: instance size " + std::to_string(sys.n) +
                              " exceeds cap " + std::to_string(node_cap));
    if (!all_finite(sys.c_v.v) || !all_finite(sys.c_e.v))
        throw ParamError("solve_exact: non-finite entries");

    auto lut = t_edge_lookup(sys);
    BranchAndBound bb(sys, lut);
    // seed only the bound (not the assignment) so the lexicographically first
    // optimum is the one the DFS keeps
    Matching seed = solve_heuristic(sys);
    bb.best = seed.objective + 1e-9 * (1.0 + std::abs(seed.objective));
    bb.dfs(0, 0.0);
    Matching m;
    m.assignment = bb.best_assign;
    m.objective = matching_objective(sys, m.assignment, lut);
    m.mode = SolveMode::exact;
    return m;
}

Matching solve_heuristic(const AffinitySystem& sys, int max_iters) {
    Matching m = solve_lap(sys.c_v);
    m.mode = SolveMode::heuristic;
    auto lut = t_edge_lookup(sys);
    m.objective = matching_objective(sys, m.assignment, lut);
    if (sys.edges_s.empty() || sys.edges_t.empty()) return m;

    for (int it = 0; it < max_iters; ++it) {
        double best_obj = m.objective;
        int best_i = -1, best_j = -1;
        std::vector<int> cand = m.assignment;
        for (int i = 0; i < sys.n; ++i)
            for (int j = i + 1; j < sys.n; ++j) {
                std::swap(cand[i], cand[j]);
                double obj = matching_objective(sys, cand, lut);
                if (obj < best_obj) {
                    best_obj = obj;
                    best_i = i;
                    best_j = j;
                }
                std::swap(cand[i], cand[j]);
            }
        if (best_i < 0) break;
        std::swap(m.assignment[best_i], m.assignment[best_j]);
        m.objective = best_obj;
    }
    return m;
}

Matching solve_with_mode(const AffinitySystem& sys, SolveMode mode, int node_cap, int max_iters) {
    switch (mode) {
        case SolveMode::exact: return solve_exact(sys, node_cap);
        case SolveMode::heuristic: return solve_heuristic(sys, max_iters);
        default: return solve_lap(sys.c_v);
    }
}

Matrix edge_usage(const AffinitySystem& sys, std::span<const int> assignment,
                  const std::vector<int>& t_lookup) {
    Matrix u(int(sys.edges_s.size()), int(sys.edges_t.size()));
    for (size_t e = 0; e < sys.edges_s.size(); ++e) {
        auto [i, j] = sys.edges_s[e];
        int a = assignment[i], b = assignment[j];
        int f = t_lookup[size_t(a) * sys.n + b];
        if (f < 0) continue;
        u(int(e), f) = (a < b) ? 1.0 : -1.0;
    }
    return u;
}

}  // namespace gmssl
