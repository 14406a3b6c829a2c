#include "gmssl/graphnet.hpp"

#include <algorithm>
#include <cmath>

#include "gmssl/errors.hpp"

namespace gmssl {

namespace {

double f32(double x) { return double(float(x)); }

double cosine_raw(const double* a, const double* b, int n) {
    double na = norm2(a, n), nb = norm2(b, n);
    double d = na * nb;
    if (d < 1e-12) return 0.0;
    return dot(a, b, n) / d;
}

}  // namespace

BatchGraph knn_graph(const Matrix& x, int k) {
    int n = x.rows;
    if (k < 1) throw ParamError("knn_graph: k must be >= 1");
    if (n <= k) throw ParamError("knn_graph: need N > k");

    BatchGraph g;
    g.x = x;
    g.adj.assign(size_t(n) * n, 0);
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (int i = 0; i < n; ++i) {
        cand.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.push_back({1.0 - cosine_raw(x.row(i), x.row(j), x.cols), j});
        }
        // stable on the index for deterministic tie-breaks
        std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first < b.first : a.second < b.second;
        });
        for (int t = 0; t < k; ++t) g.adj[size_t(i) * n + cand[t].second] = 1;
    }
    // symmetrize by union
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            uint8_t u = g.adj[size_t(i) * n + j] | g.adj[size_t(j) * n + i];
            g.adj[size_t(i) * n + j] = g.adj[size_t(j) * n + i] = u;
        }
    for (int i = 0; i < n; ++i) g.adj[size_t(i) * n + i] = 0;
    return g;
}

GcnParams init_gcn(Rng& rng, int feat_dim, int hidden_dim) {
    GcnParams p;
    auto make = [&](int in, int out) {
        Matrix w(in, out);
        double scale = std::sqrt(2.0 / in);
        for (auto& v : w.v) v = f32(rng.normal() * scale);
        return w;
    };
    p.layers.push_back(make(feat_dim, hidden_dim));
    p.layers.push_back(make(hidden_dim, feat_dim));
    return p;
}

Matrix gcn_forward(const BatchGraph& graph, const GcnParams& params, GcnTrace* trace) {
    int n = graph.n();
    // prop = D^{-1/2} (A+I) D^{-1/2}, degrees from A+I
    Matrix prop(n, n);
    std::vector<double> dinv(n);
    for (int i = 0; i < n; ++i) {
        double deg = 1.0;
        for (int j = 0; j < n; ++j) deg += graph.edge(i, j) ? 1.0 : 0.0;
        dinv[i] = 1.0 / std::sqrt(deg);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double a = (i == j) ? 1.0 : (graph.edge(i, j) ? 1.0 : 0.0);
            prop(i, j) = a * dinv[i] * dinv[j];
        }

    GcnTrace local;
    GcnTrace& t = trace ? *trace : local;
    t.prop = prop;
    t.h.clear();
    t.pre.clear();
    t.h.push_back(graph.x);
    Matrix h = graph.x;
    for (size_t l = 0; l < params.layers.size(); ++l) {
        if (params.layers[l].rows != h.cols)
            throw ContractError("gcn_forward: layer width mismatch");
        Matrix pre = matmul(matmul(prop, h), params.layers[l]);
        if (!all_finite(pre.v)) throw NumericError("gcn_forward: non-finite activation");
        Matrix act = pre;
        bool last = l + 1 == params.layers.size();
        if (!last)
            for (auto& v : act.v) v = v > 0.0 ? v : 0.0;
        t.pre.push_back(std::move(pre));
        t.h.push_back(act);
        h = std::move(act);
    }
    return h;
}

GcnGrads gcn_backward(const BatchGraph& graph, const GcnParams& params, const GcnTrace& trace,
                      const Matrix& grad_out) {
    size_t L = params.layers.size();
    if (trace.h.size() != L + 1) throw ContractError("gcn_backward: stale trace");
    if (!grad_out.same_shape(trace.h.back()))
        throw ContractError("gcn_backward: grad shape mismatch");

    GcnGrads g;
    g.layers.resize(L);
    Matrix d = grad_out;
    for (int l = int(L) - 1; l >= 0; --l) {
        bool last = size_t(l) + 1 == L;
        if (!last)
            for (size_t i = 0; i < d.v.size(); ++i)
                if (trace.pre[l].v[i] <= 0.0) d.v[i] = 0.0;
        Matrix ph = matmul(trace.prop, trace.h[l]);   // prop * H_{l-1}
        g.layers[l] = matmul_tn(ph, d);               // (prop H)^T dPre
        // dH_{l-1} = prop^T * dPre * W^T; prop is symmetric
        d = matmul(trace.prop, matmul_nt(d, params.layers[l]));
    }
    g.x = std::move(d);
    (void)graph;
    return g;
}

}  // namespace gmssl
