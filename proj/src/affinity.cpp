#include "gmssl/affinity.hpp"

#include <algorithm>
#include <cmath>

#include "gmssl/errors.hpp"
#include "gmssl/parallel.hpp"

namespace gmssl {

double cosine(std::span<const double> u, std::span<const double> v, bool* degenerate) {
    if (u.size() != v.size()) throw ContractError("cosine: length mismatch");
    int n = int(u.size());
    double nu = norm2(u.data(), n), nv = norm2(v.data(), n);
    double d = nu * nv;
    if (degenerate) *degenerate = d < 1e-12;
    if (d < 1e-12) return 0.0;
    return dot(u.data(), v.data(), n) / d;
}

void cosine_backward(const double* u, const double* v, int n, double coeff, double* du,
                     double* dv) {
    double nu = norm2(u, n), nv = norm2(v, n);
    double d = nu * nv;
    if (d < 1e-12) return;
    double uv = dot(u, v, n);
    double inv = 1.0 / d;
    double cu = uv / (d * nu * nu);  // cos / |u|^2
    double cv = uv / (d * nv * nv);
    for (int k = 0; k < n; ++k) {
        if (du) du[k] += coeff * (v[k] * inv - u[k] * cu);
        if (dv) dv[k] += coeff * (u[k] * inv - v[k] * cv);
    }
}

double global_cost(std::span<const double> z_s, std::span<const double> z_t, bool* degenerate) {
    return cosine(z_s, z_t, degenerate);
}

namespace {

// flattened feature vector at cell p of a D x R x S map is strided; gather it
void gather_cell(const Tensor3& y, int p, std::vector<double>& out) {
    int cell = y.h * y.w;
    out.resize(y.ch);
    for (int d = 0; d < y.ch; ++d) out[d] = y.v[size_t(d) * cell + p];
}

size_t keep_count(double gamma, size_t n) {
    if (n == 0) return 0;
    auto k = size_t(std::llround(gamma * double(n)));
    return std::max<size_t>(1, std::min(k, n));
}

}  // namespace

double local_cost(const Tensor3& y_s, const Tensor3& y_t, const PosMap& pos_s,
                  const PosMap& pos_t, double gamma, LocalCostTrace* trace) {
    if (y_s.ch != y_t.ch || y_s.h != y_t.h || y_s.w != y_t.w)
        throw ContractError("local_cost: feature map shapes differ");
    if (pos_s.h != y_s.h || pos_s.w != y_s.w || pos_t.h != y_t.h || pos_t.w != y_t.w)
        throw ContractError("local_cost: position maps must be at feature resolution");
    if (gamma < 0.0 || gamma > 1.0) throw ParamError("local_cost: gamma must be in [0,1]");

    int cells = y_s.h * y_s.w;
    std::vector<int> sources, targets;
    for (int p = 0; p < cells; ++p)
        if (pos_s.valid[p]) sources.push_back(p);
    for (int m = 0; m < cells; ++m)
        if (pos_t.valid[m]) targets.push_back(m);

    LocalCostTrace local;
    LocalCostTrace& t = trace ? *trace : local;
    t.location.clear();
    t.feature.clear();
    t.no_overlap = sources.empty() || targets.empty();
    if (t.no_overlap) return 0.0;

    std::vector<double> qs, qt;
    std::vector<LocalPair> loc_all, feat_all;
    loc_all.reserve(sources.size());
    feat_all.reserve(sources.size());
    for (int p : sources) {
        // m(p): spatially closest target cell in source-frame coordinates
        double pr = pos_s.row[p], pc = pos_s.col[p];
        int best_m = -1;
        double best_d = 0.0;
        for (int m : targets) {
            double dr = pr - pos_t.row[m], dc = pc - pos_t.col[m];
            double d2 = dr * dr + dc * dc;
            if (best_m < 0 || d2 < best_d) {
                best_d = d2;
                best_m = m;
            }
        }
        gather_cell(y_s, p, qs);
        gather_cell(y_t, best_m, qt);
        loc_all.push_back({p, best_m, cosine(qs, qt)});

        // m'(p): closest target feature vector under L2
        int best_f = -1;
        double best_fd = 0.0;
        for (int m : targets) {
            double d2 = 0.0;
            int cell = y_t.h * y_t.w;
            for (int d = 0; d < y_s.ch; ++d) {
                double diff = qs[d] - y_t.v[size_t(d) * cell + m];
                d2 += diff * diff;
            }
            if (best_f < 0 || d2 < best_fd) {
                best_fd = d2;
                best_f = m;
            }
        }
        gather_cell(y_t, best_f, qt);
        feat_all.push_back({p, best_f, cosine(qs, qt)});
    }

    auto select_top = [&](std::vector<LocalPair>& all) {
        size_t keep = keep_count(gamma, all.size());
        std::stable_sort(all.begin(), all.end(),
                         [](const LocalPair& a, const LocalPair& b) { return a.cos > b.cos; });
        all.resize(keep);
    };
    select_top(loc_all);
    select_top(feat_all);

    double loc_mean = 0.0, feat_mean = 0.0;
    for (const auto& lp : loc_all) loc_mean += lp.cos;
    for (const auto& fp : feat_all) feat_mean += fp.cos;
    loc_mean /= double(loc_all.size());
    feat_mean /= double(feat_all.size());

    t.location = std::move(loc_all);
    t.feature = std::move(feat_all);
    return 0.5 * (loc_mean + feat_mean);
}

void local_cost_backward(const Tensor3& y_s, const Tensor3& y_t, const LocalCostTrace& trace,
                         double coeff, Tensor3& d_ys, Tensor3& d_yt) {
    if (trace.no_overlap || coeff == 0.0) return;
    int cells = y_s.h * y_s.w;
    std::vector<double> qs(y_s.ch), qt(y_s.ch), dqs(y_s.ch), dqt(y_s.ch);
    auto run = [&](const std::vector<LocalPair>& pairs) {
        if (pairs.empty()) return;
        double w = coeff * 0.5 / double(pairs.size());
        for (const auto& pr : pairs) {
            gather_cell(y_s, pr.p, qs);
            gather_cell(y_t, pr.m, qt);
            std::fill(dqs.begin(), dqs.end(), 0.0);
            std::fill(dqt.begin(), dqt.end(), 0.0);
            cosine_backward(qs.data(), qt.data(), y_s.ch, w, dqs.data(), dqt.data());
            for (int d = 0; d < y_s.ch; ++d) {
                d_ys.v[size_t(d) * cells + pr.p] += dqs[d];
                d_yt.v[size_t(d) * cells + pr.m] += dqt[d];
            }
        }
    };
    run(trace.location);
    run(trace.feature);
}

double vertex_affinity(double global, double local_st, double local_ts, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ParamError("vertex_affinity: alpha must be in [0,1]");
    return alpha * global + (1.0 - alpha) * (local_st + local_ts);
}

double edge_affinity(std::span<const double> z_i, std::span<const double> z_j,
                     std::span<const double> z_a, std::span<const double> z_b, bool* degenerate) {
    int n = int(z_i.size());
    std::vector<double> u(n), v(n);
    for (int k = 0; k < n; ++k) {
        u[k] = z_i[k] - z_j[k];
        v[k] = z_a[k] - z_b[k];
    }
    return cosine(u, v, degenerate);
}

std::vector<std::pair<int, int>> canonical_edges(const BatchGraph& g) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < g.n(); ++i)
        for (int j = i + 1; j < g.n(); ++j)
            if (g.edge(i, j)) edges.push_back({i, j});
    return edges;
}

AffinitySystem build_system(const Matrix& zhat_s, const Matrix& zhat_t, const BatchGraph& graph_s,
                            const BatchGraph& graph_t, const std::vector<Tensor3>& y_s,
                            const std::vector<Tensor3>& y_t, const std::vector<PosMap>& pos_s,
                            const std::vector<PosMap>& pos_t, double alpha, double gamma,
                            AffinityTrace* trace) {
    int n = zhat_s.rows;
    if (zhat_t.rows != n || int(y_s.size()) != n || int(y_t.size()) != n ||
        int(pos_s.size()) != n || int(pos_t.size()) != n || graph_s.n() != n || graph_t.n() != n)
        throw ContractError("build_system: inconsistent batch size");

    AffinitySystem sys;
    sys.n = n;
    sys.c_v = Matrix(n, n);
    if (trace) {
        trace->st.assign(size_t(n) * n, {});
        trace->ts.assign(size_t(n) * n, {});
    }

    parallel_for(size_t(n) * n, [&](size_t idx) {
        int i = int(idx / n), a = int(idx % n);
        double glo = global_cost({zhat_s.row(i), size_t(zhat_s.cols)},
                                 {zhat_t.row(a), size_t(zhat_t.cols)});
        LocalCostTrace* st = trace ? &trace->st[idx] : nullptr;
        LocalCostTrace* ts = trace ? &trace->ts[idx] : nullptr;
        double lst = local_cost(y_s[i], y_t[a], pos_s[i], pos_t[a], gamma, st);
        double lts = local_cost(y_t[a], y_s[i], pos_t[a], pos_s[i], gamma, ts);
        sys.c_v(i, a) = vertex_affinity(glo, lst, lts, alpha);
    });

    sys.edges_s = canonical_edges(graph_s);
    sys.edges_t = canonical_edges(graph_t);
    sys.c_e = Matrix(int(sys.edges_s.size()), int(sys.edges_t.size()));
    int F = zhat_s.cols;
    parallel_for(sys.edges_s.size(), [&](size_t e) {
        auto [i, j] = sys.edges_s[e];
        for (size_t f = 0; f < sys.edges_t.size(); ++f) {
            auto [a, b] = sys.edges_t[f];
            sys.c_e(int(e), int(f)) =
                edge_affinity({zhat_s.row(i), size_t(F)}, {zhat_s.row(j), size_t(F)},
                              {zhat_t.row(a), size_t(F)}, {zhat_t.row(b), size_t(F)});
        }
    });
    return sys;
}

AffinityGrads affinity_backward(const AffinitySystem& sys, const AffinityTrace& trace,
                                const Matrix& zhat_s, const Matrix& zhat_t,
                                const std::vector<Tensor3>& y_s, const std::vector<Tensor3>& y_t,
                                const Matrix& dc_v, const Matrix& dc_e, double alpha) {
    int n = sys.n, F = zhat_s.cols;
    if (dc_v.rows != n || dc_v.cols != n) throw ContractError("affinity_backward: dc_v shape");
    if (!dc_e.v.empty() &&
        (dc_e.rows != int(sys.edges_s.size()) || dc_e.cols != int(sys.edges_t.size())))
        throw ContractError("affinity_backward: dc_e shape");

    AffinityGrads g;
    g.d_zhat_s = Matrix(n, F);
    g.d_zhat_t = Matrix(n, F);
    g.d_ys.reserve(n);
    g.d_yt.reserve(n);
    for (int i = 0; i < n; ++i) {
        g.d_ys.emplace_back(y_s[i].ch, y_s[i].h, y_s[i].w);
        g.d_yt.emplace_back(y_t[i].ch, y_t[i].h, y_t[i].w);
    }

    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
            double d = dc_v(i, a);
            if (d == 0.0) continue;
            cosine_backward(zhat_s.row(i), zhat_t.row(a), F, alpha * d, g.d_zhat_s.row(i),
                            g.d_zhat_t.row(a));
            size_t idx = size_t(i) * n + a;
            local_cost_backward(y_s[i], y_t[a], trace.st[idx], (1.0 - alpha) * d, g.d_ys[i],
                                g.d_yt[a]);
            local_cost_backward(y_t[a], y_s[i], trace.ts[idx], (1.0 - alpha) * d, g.d_yt[a],
                                g.d_ys[i]);
        }

    if (!dc_e.v.empty()) {
        std::vector<double> u(F), v(F), du(F), dv(F);
        for (size_t e = 0; e < sys.edges_s.size(); ++e) {
            auto [i, j] = sys.edges_s[e];
            for (size_t f = 0; f < sys.edges_t.size(); ++f) {
                double d = dc_e(int(e), int(f));
                if (d == 0.0) continue;
                auto [a, b] = sys.edges_t[f];
                for (int k = 0; k < F; ++k) {
                    u[k] = zhat_s(i, k) - zhat_s(j, k);
                    v[k] = zhat_t(a, k) - zhat_t(b, k);
                }
                std::fill(du.begin(), du.end(), 0.0);
                std::fill(dv.begin(), dv.end(), 0.0);
                cosine_backward(u.data(), v.data(), F, d, du.data(), dv.data());
                for (int k = 0; k < F; ++k) {
                    g.d_zhat_s(i, k) += du[k];
                    g.d_zhat_s(j, k) -= du[k];
                    g.d_zhat_t(a, k) += dv[k];
                    g.d_zhat_t(b, k) -= dv[k];
                }
            }
        }
    }
    return g;
}

}  // namespace gmssl
