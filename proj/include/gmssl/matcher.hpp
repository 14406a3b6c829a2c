#pragma once

#include <span>
#include <string>
#include <vector>

#include "gmssl/affinity.hpp"
#include "gmssl/array.hpp"

namespace gmssl {

enum class SolveMode { exact, heuristic, lap_only };

std::string to_string(SolveMode mode);
SolveMode solve_mode_from_string(const std::string& s);

constexpr int kDefaultExactCap = 10;

// One-to-one assignment between the s- and t-graph vertices. objective is the
// minimized value of the matching problem: negative total vertex affinity
// minus the signed edge affinities collected by the assignment.
struct Matching {
    std::vector<int> assignment;  // assignment[i] = a
    double objective = 0.0;
    SolveMode mode = SolveMode::lap_only;
};

// Lookup table for canonical t-edges: t_lookup[a*n+b] = edge index or -1.
std::vector<int> t_edge_lookup(const AffinitySystem& sys);

// Canonical objective recomputation: -sum_i c_v[i][s(i)] minus, for every
// s-edge (i,j) whose image {s(i),s(j)} is a t-edge, the oriented c_e value
// (stored value when s(i) < s(j), negated otherwise).
double matching_objective(const AffinitySystem& sys, std::span<const int> assignment,
                          const std::vector<int>& t_lookup);
double matching_objective(const AffinitySystem& sys, std::span<const int> assignment);

// Exact maximum-affinity assignment on c_v alone (O(N^3) augmenting paths),
// refined to the lexicographically smallest optimal assignment.
Matching solve_lap(const Matrix& c_v);

// Globally optimal solution of the second-order objective by depth-first
// branch and bound; admissible bound is LAP on the remaining vertex
// affinities plus the best possible gain of the undecided edges. Refuses
// instances above node_cap.
Matching solve_exact(const AffinitySystem& sys, int node_cap = kDefaultExactCap);

// LAP seed plus best-improvement 2-swap local search on the full objective.
Matching solve_heuristic(const AffinitySystem& sys, int max_iters = 1000);

Matching solve_with_mode(const AffinitySystem& sys, SolveMode mode,
                         int node_cap = kDefaultExactCap, int max_iters = 1000);

// Signed edge-usage indicator of an assignment: +1 where the s-edge maps onto
// the t-edge in canonical orientation, -1 when crossed, 0 otherwise.
Matrix edge_usage(const AffinitySystem& sys, std::span<const int> assignment,
                  const std::vector<int>& t_lookup);

}  // namespace gmssl
