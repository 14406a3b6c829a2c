#include "gmssl/imle.hpp"

#include <algorithm>
#include <cmath>

#include "gmssl/errors.hpp"

namespace gmssl {

std::vector<double> gumbel_sample(Rng& rng, size_t count) {
    std::vector<double> out(count);
    for (auto& x : out) {
        double u = std::clamp(rng.uniform(), 1e-12, 1.0 - 1e-12);
        x = -std::log(-std::log(u));
    }
    return out;
}

std::pair<Matching, ImleState> imle_forward(const AffinitySystem& sys, SolveMode mode,
                                            double lambda, double noise_scale, Rng& rng,
                                            double constant_offset, int node_cap, int max_iters) {
    if (lambda <= 0.0) throw ParamError("imle_forward: lambda must be positive");
    if (noise_scale < 0.0) throw ParamError("imle_forward: noise_scale must be >= 0");

    ImleState st;
    st.c_v = sys.c_v;
    st.c_e = sys.c_e;
    st.edges_s = sys.edges_s;
    st.edges_t = sys.edges_t;
    st.lambda = lambda;
    st.noise_scale = noise_scale;
    st.mode = mode;
    st.node_cap = node_cap;
    st.max_iters = max_iters;

    st.noise_v = Matrix(sys.c_v.rows, sys.c_v.cols, constant_offset);
    st.noise_e = Matrix(sys.c_e.rows, sys.c_e.cols, constant_offset);
    if (noise_scale > 0.0) {
        auto ev = gumbel_sample(rng, st.noise_v.v.size());
        for (size_t i = 0; i < ev.size(); ++i) st.noise_v.v[i] += noise_scale * ev[i];
        auto ee = gumbel_sample(rng, st.noise_e.v.size());
        for (size_t i = 0; i < ee.size(); ++i) st.noise_e.v[i] += noise_scale * ee[i];
    }

    AffinitySystem perturbed = sys;
    for (size_t i = 0; i < perturbed.c_v.v.size(); ++i) perturbed.c_v.v[i] += st.noise_v.v[i];
    for (size_t i = 0; i < perturbed.c_e.v.size(); ++i) perturbed.c_e.v[i] += st.noise_e.v[i];

    st.vtilde = solve_with_mode(perturbed, mode, node_cap, max_iters);
    return {st.vtilde, std::move(st)};
}

double hamming_loss(const Matching& v_hat, std::span<const int> v_star) {
    if (v_hat.assignment.size() != v_star.size())
        throw ContractError("hamming_loss: size mismatch");
    int mismatches = 0;
    for (size_t i = 0; i < v_star.size(); ++i)
        if (v_hat.assignment[i] != v_star[i]) ++mismatches;
    return 2.0 * mismatches;
}

Matrix hamming_loss_grad(std::span<const int> v_star) {
    int n = int(v_star.size());
    Matrix g(n, n, 1.0);
    for (int i = 0; i < n; ++i) g(i, v_star[i]) = -1.0;
    return g;
}

ImleGrads imle_backward(ImleState& state, const Matrix& grad_vtilde) {
    if (state.consumed) throw ContractError("imle_backward: state already consumed");
    state.consumed = true;
    int n = state.c_v.rows;
    if (grad_vtilde.rows != n || grad_vtilde.cols != n)
        throw ContractError("imle_backward: grad shape mismatch");

    AffinitySystem tilted;
    tilted.n = n;
    tilted.c_v = state.c_v;
    tilted.c_e = state.c_e;
    tilted.edges_s = state.edges_s;
    tilted.edges_t = state.edges_t;
    for (size_t i = 0; i < tilted.c_v.v.size(); ++i)
        tilted.c_v.v[i] += state.noise_v.v[i] - state.lambda * grad_vtilde.v[i];
    for (size_t i = 0; i < tilted.c_e.v.size(); ++i) tilted.c_e.v[i] += state.noise_e.v[i];

    Matching v_lambda = solve_with_mode(tilted, state.mode, state.node_cap, state.max_iters);

    ImleGrads g;
    g.dc_v = Matrix(n, n);
    double inv = 1.0 / state.lambda;
    for (int i = 0; i < n; ++i) {
        g.dc_v(i, state.vtilde.assignment[i]) += inv;
        g.dc_v(i, v_lambda.assignment[i]) -= inv;
    }
    if (state.mode != SolveMode::lap_only && !state.c_e.v.empty()) {
        auto lut = t_edge_lookup(tilted);
        Matrix u1 = edge_usage(tilted, state.vtilde.assignment, lut);
        Matrix u2 = edge_usage(tilted, v_lambda.assignment, lut);
        g.dc_e = Matrix(u1.rows, u1.cols);
        for (size_t i = 0; i < u1.v.size(); ++i) g.dc_e.v[i] = (u1.v[i] - u2.v[i]) * inv;
    } else {
        g.dc_e = Matrix(state.c_e.rows, state.c_e.cols);
    }
    return g;
}

}  // namespace gmssl
