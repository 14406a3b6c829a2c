#pragma once

#include <optional>
#include <vector>

#include "gmssl/trainer.hpp"

namespace gmssl {

struct MatchEvalResult {
    double match_acc = 0.0;
    // accuracy restricted to the duplicate-pair vertices of batches seeded
    // with one dup pair; absent when the corpus slice has no intact pairs
    std::optional<double> dup_disambig;
};

// Solves fresh, noise-free matching problems on batches drawn from the
// held-out slice [eval_begin, corpus size). Dup batches force exactly one
// duplicate pair into the batch.
MatchEvalResult eval_matching(const ModelParams& params, const Corpus& corpus, int eval_begin,
                              const TrainConfig& cfg, AblationAxis axis, int trials,
                              uint64_t eval_seed);

// Matching accuracy of solving one batch given externally supplied embeddings
// (used by oracle tests and as the core of eval_matching).
double match_accuracy_once(const AffinitySystem& sys, SolveMode mode, int exact_cap,
                           int heuristic_iters);

struct SolverQuality {
    double mean_gap = 0.0;        // mean relative objective gap heuristic vs exact
    double frac_within_5pct = 0.0;
    double exact_ms_median = 0.0;
    double heuristic_ms_median = 0.0;
};

// Random affinity systems; the exact solver certifies the optimum and the
// heuristic is scored against it.
SolverQuality solver_quality(int n_instances, int n, Rng& rng);

AffinitySystem random_affinity_system(Rng& rng, int n, double edge_density = 0.5);

// Multinomial logistic probe on frozen embeddings, 80/20 split.
double linear_probe(const Matrix& embeddings, const std::vector<int>& labels,
                    uint64_t split_seed);

// Embeddings of raw corpus images (identity geometry + normalization only).
Matrix embed_corpus(const ModelParams& params, const Corpus& corpus);

struct EvalReport {
    double match_acc = 0.0;
    std::optional<double> dup_disambig;
    double solver_gap = 0.0;
    double probe_acc = 0.0;
};

// Fixed vertex-only instance with a near-tie between the identity and the
// (0 1) swap; the workbench for estimator-quality checks.
AffinitySystem grad_check_instance(int n);

struct GradCheckResult {
    Matrix imle_mean;   // mean of single-sample estimates
    Matrix oracle;      // Monte-Carlo finite-difference gradient of E[L]
    double cosine_sim = 0.0;
};

// Compares the mean IMLE gradient against a common-random-numbers central
// difference of E[L(GM(theta + eps))], computed with an independent
// permutation enumeration.
GradCheckResult imle_grad_check(int n, int samples, double lambda, int oracle_samples,
                                uint64_t seed);

}  // namespace gmssl
