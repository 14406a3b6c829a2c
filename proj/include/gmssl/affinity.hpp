#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gmssl/array.hpp"
#include "gmssl/augment.hpp"
#include "gmssl/graphnet.hpp"

namespace gmssl {

// eps-guarded cosine similarity; zero-norm inputs yield 0 and set *degenerate.
double cosine(std::span<const double> u, std::span<const double> v, bool* degenerate = nullptr);

// d cos(u,v) projected back onto u and v, scaled by coeff. Zero when the
// forward value was degenerate.
void cosine_backward(const double* u, const double* v, int n, double coeff, double* du,
                     double* dv);

// c^glo: cosine of the two post-message-passing embeddings.
double global_cost(std::span<const double> z_s, std::span<const double> z_t,
                   bool* degenerate = nullptr);

// One location-based and one feature-based nearest-neighbor pairing per source
// cell; select_top keeps the gamma-best pairs of each route (ranked by the
// cosine itself).
struct LocalPair {
    int p = 0;      // flattened source cell
    int m = 0;      // flattened matched cell in the other map
    double cos = 0.0;
};

struct LocalCostTrace {
    std::vector<LocalPair> location, feature;  // kept pairs only
    bool no_overlap = false;
};

// Mean cosine over the kept location pairs plus mean over the kept feature
// pairs, weighted 0.5 each. Source cells and candidate cells with sentinel
// positions are excluded; returns 0 (flagged) when nothing overlaps.
double local_cost(const Tensor3& y_s, const Tensor3& y_t, const PosMap& pos_s,
                  const PosMap& pos_t, double gamma, LocalCostTrace* trace = nullptr);

// Gradient of local_cost w.r.t. both feature maps, using the pairings frozen
// in the trace (the discrete matches are treated as constants).
void local_cost_backward(const Tensor3& y_s, const Tensor3& y_t, const LocalCostTrace& trace,
                         double coeff, Tensor3& d_ys, Tensor3& d_yt);

// c^v entry: alpha * global + (1 - alpha) * (local_st + local_ts).
double vertex_affinity(double global, double local_st, double local_ts, double alpha);

// c^e entry: cosine of the two edge difference vectors.
double edge_affinity(std::span<const double> z_i, std::span<const double> z_j,
                     std::span<const double> z_a, std::span<const double> z_b,
                     bool* degenerate = nullptr);

// Second-order matching instance. Edge lists are canonical (i < j); c_e holds
// the canonical-orientation cosines. Matching an s-edge (i,j) to t-vertices
// (a,b) with a > b negates the stored value (both difference vectors of Eq. 4
// keep the orientation induced by the assignment).
struct AffinitySystem {
    int n = 0;
    Matrix c_v;                                 // N x N
    std::vector<std::pair<int, int>> edges_s;   // canonical i < j
    std::vector<std::pair<int, int>> edges_t;
    Matrix c_e;                                 // |Es| x |Et|
};

std::vector<std::pair<int, int>> canonical_edges(const BatchGraph& g);

struct AffinityTrace {
    std::vector<LocalCostTrace> st;  // N*N, local(y_s[i], y_t[a])
    std::vector<LocalCostTrace> ts;  // N*N, local(y_t[a], y_s[i])
};

// Assembles c_v and c_e for a batch. Feature maps and positions are the
// pre-GCN quantities; embeddings are the post-GCN rows.
AffinitySystem build_system(const Matrix& zhat_s, const Matrix& zhat_t, const BatchGraph& graph_s,
                            const BatchGraph& graph_t, const std::vector<Tensor3>& y_s,
                            const std::vector<Tensor3>& y_t, const std::vector<PosMap>& pos_s,
                            const std::vector<PosMap>& pos_t, double alpha, double gamma,
                            AffinityTrace* trace = nullptr);

struct AffinityGrads {
    Matrix d_zhat_s, d_zhat_t;
    std::vector<Tensor3> d_ys, d_yt;
};

// Chains (dL/dc_v, dL/dc_e) back to embeddings and feature maps, mirroring
// each forward formula. dc_e may be empty when no edge gradient is needed.
AffinityGrads affinity_backward(const AffinitySystem& sys, const AffinityTrace& trace,
                                const Matrix& zhat_s, const Matrix& zhat_t,
                                const std::vector<Tensor3>& y_s, const std::vector<Tensor3>& y_t,
                                const Matrix& dc_v, const Matrix& dc_e, double alpha);

}  // namespace gmssl
