#pragma once

#include <vector>

#include "gmssl/array.hpp"
#include "gmssl/rng.hpp"

namespace gmssl {

// Node-attributed batch graph: vertices are views, adjacency is the
// symmetrized kNN relation, features are the projected embeddings.
struct BatchGraph {
    Matrix x;                    // N x F node features
    std::vector<uint8_t> adj;    // N x N, symmetric, zero diagonal
    char side = 's';

    int n() const { return x.rows; }
    bool edge(int i, int j) const { return adj[size_t(i) * x.rows + j] != 0; }
};

// Directed kNN by cosine distance, then symmetrized by union. Ties broken
// toward the lowest index.
BatchGraph knn_graph(const Matrix& x, int k);

struct GcnParams {
    std::vector<Matrix> layers;  // layer l maps width(l) -> width(l+1)
};

// Two layers, F -> hidden -> F.
GcnParams init_gcn(Rng& rng, int feat_dim, int hidden_dim);

struct GcnTrace {
    Matrix prop;                 // D^{-1/2} (A+I) D^{-1/2}
    std::vector<Matrix> h;       // h[0] = X, h[l+1] = layer l output
    std::vector<Matrix> pre;     // pre-activation per layer
};

// H_l = sigma(prop * H_{l-1} * W_{l-1}); ReLU on hidden layers, identity on
// the last so outputs keep negative components. Degrees come from A + I, so
// they are strictly positive.
Matrix gcn_forward(const BatchGraph& graph, const GcnParams& params, GcnTrace* trace = nullptr);

struct GcnGrads {
    std::vector<Matrix> layers;
    Matrix x;  // gradient w.r.t. node features, N x F
};

GcnGrads gcn_backward(const BatchGraph& graph, const GcnParams& params, const GcnTrace& trace,
                      const Matrix& grad_out);

}  // namespace gmssl
