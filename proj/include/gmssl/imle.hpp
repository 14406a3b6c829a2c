#pragma once

#include <span>
#include <vector>

#include "gmssl/affinity.hpp"
#include "gmssl/matcher.hpp"
#include "gmssl/rng.hpp"

namespace gmssl {

// Standard Gumbel(0,1) samples: -ln(-ln(u)), u uniform clipped away from
// {0,1}. Mean 0.5772..., variance pi^2/6.
std::vector<double> gumbel_sample(Rng& rng, size_t count);

// State saved by the forward pass for the single matching backward call.
struct ImleState {
    Matrix c_v, c_e;              // unperturbed costs
    Matrix noise_v, noise_e;      // scaled Gumbel draws (plus constant offset)
    std::vector<std::pair<int, int>> edges_s, edges_t;
    Matching vtilde;
    double lambda = 80.0;
    double noise_scale = 1.0;
    SolveMode mode = SolveMode::heuristic;
    int node_cap = kDefaultExactCap;
    int max_iters = 1000;
    bool consumed = false;
};

// Solves GM(c_v + eps, c_e + eps') and saves everything the backward pass
// needs. constant_offset supports the no-noise ablation, which replaces the
// Gumbel draw with a constant added to both cost blocks.
std::pair<Matching, ImleState> imle_forward(const AffinitySystem& sys, SolveMode mode,
                                            double lambda, double noise_scale, Rng& rng,
                                            double constant_offset = 0.0,
                                            int node_cap = kDefaultExactCap,
                                            int max_iters = 1000);

// Hamming distance between the two N x N assignment indicators:
// vhat.(1-v*) + v*.(1-vhat) = 2 * (#mismatched rows).
double hamming_loss(const Matching& v_hat, std::span<const int> v_star);

// Gradient of the Hamming loss w.r.t. the solver output indicator: -1 at gold
// entries, +1 elsewhere.
Matrix hamming_loss_grad(std::span<const int> v_star);

struct ImleGrads {
    Matrix dc_v;  // N x N
    Matrix dc_e;  // |Es| x |Et|
};

// Algorithm-1 backward: re-solves the noise-carrying instance tilted by
// -lambda * grad_vtilde (vertex block only; the loss does not read edges) and
// returns the scaled indicator differences. Single use per forward.
ImleGrads imle_backward(ImleState& state, const Matrix& grad_vtilde);

}  // namespace gmssl
