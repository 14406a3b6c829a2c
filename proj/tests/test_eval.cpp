#include "doctest.h"
#include "gmssl/eval.hpp"
#include "gmssl/errors.hpp"

#include <cmath>

using namespace gmssl;

TEST_CASE("one-hot oracle embeddings match perfectly") {
    int n = 16;
    AffinitySystem sys;
    sys.n = n;
    sys.c_v = Matrix(n, n);
    for (int i = 0; i < n; ++i) sys.c_v(i, i) = 1.0;  // cosine of matching one-hots
    sys.c_e = Matrix(0, 0);
    CHECK(match_accuracy_once(sys, SolveMode::heuristic, 10, 100) == 1.0);
}

TEST_CASE("random embeddings sit near chance") {
    Rng rng(1);
    int n = 16;
    double acc = 0.0;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        Matrix zs(n, 8), zt(n, 8);
        for (auto& v : zs.v) v = rng.uniform(-1.0, 1.0);
        for (auto& v : zt.v) v = rng.uniform(-1.0, 1.0);
        AffinitySystem sys;
        sys.n = n;
        sys.c_v = Matrix(n, n);
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a)
                sys.c_v(i, a) = cosine({zs.row(i), 8}, {zt.row(a), 8});
        sys.c_e = Matrix(0, 0);
        acc += match_accuracy_once(sys, SolveMode::heuristic, 10, 100);
    }
    acc /= trials;
    CHECK(acc < 0.2);  // chance is 1/16
}

TEST_CASE("solver quality: zero edges give exactly zero gap") {
    Rng rng(2);
    for (int t = 0; t < 25; ++t) {
        AffinitySystem sys = random_affinity_system(rng, 6, 0.0);
        REQUIRE(sys.edges_s.empty());
        Matching ex = solve_exact(sys);
        Matching he = solve_heuristic(sys);
        CHECK(he.objective == doctest::Approx(ex.objective).epsilon(1e-12));
    }
}

TEST_CASE("solver quality meets the gap and positivity contracts") {
    Rng rng(3);
    SolverQuality q = solver_quality(60, 6, rng);
    CHECK(q.mean_gap >= 0.0);
    CHECK(q.frac_within_5pct >= 0.95);
    CHECK(q.heuristic_ms_median < 10.0);
}

TEST_CASE("linear probe separates a separable toy and fails shuffled labels") {
    Rng rng(4);
    int n = 200, d = 8;
    Matrix emb(n, d);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        labels[i] = int(rng.uniform_int(4));
        for (int j = 0; j < d; ++j) emb(i, j) = rng.uniform(-0.05, 0.05);
        emb(i, labels[i]) += 1.0;  // linearly separable clusters
    }
    double acc = linear_probe(emb, labels, 11);
    CHECK(acc > 0.95);

    std::vector<int> shuffled = labels;
    Rng shuffle_rng(5);
    for (size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[shuffle_rng.uniform_int(i)]);
    double chance = linear_probe(emb, shuffled, 11);
    CHECK(chance < 0.45);  // 4 classes, chance 0.25 plus slack

    std::vector<int> single(n, 0);
    CHECK_THROWS_AS(linear_probe(emb, single, 3), ParamError);
}

TEST_CASE("match accuracy is invariant to relabeling the batch order") {
    Rng rng(6);
    int n = 8;
    AffinitySystem sys = random_affinity_system(rng, n, 0.4);
    Matching m = solve_heuristic(sys);
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += m.assignment[i] == i;

    // apply the same permutation to both sides
    auto perm = sample_distinct(rng, n, n);
    AffinitySystem psys;
    psys.n = n;
    psys.c_v = Matrix(n, n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) psys.c_v(i, a) = sys.c_v(perm[i], perm[a]);
    auto map_edges = [&](const std::vector<std::pair<int, int>>& edges) {
        std::vector<int> inv(n);
        for (int i = 0; i < n; ++i) inv[perm[i]] = i;
        std::vector<std::pair<int, int>> out;
        for (auto [i, j] : edges) {
            int a = inv[i], b = inv[j];
            out.push_back({std::min(a, b), std::max(a, b)});
        }
        return out;
    };
    psys.edges_s = map_edges(sys.edges_s);
    psys.edges_t = map_edges(sys.edges_t);
    psys.c_e = Matrix(int(psys.edges_s.size()), int(psys.edges_t.size()));
    for (size_t e = 0; e < sys.edges_s.size(); ++e)
        for (size_t f = 0; f < sys.edges_t.size(); ++f) {
            // orientation may flip when the permutation reverses an edge
            std::vector<int> inv(n);
            for (int i = 0; i < n; ++i) inv[perm[i]] = i;
            auto [i, j] = sys.edges_s[e];
            auto [a, b] = sys.edges_t[f];
            double sgn = 1.0;
            if (inv[i] > inv[j]) sgn = -sgn;
            if (inv[a] > inv[b]) sgn = -sgn;
            psys.c_e(int(e), int(f)) = sgn * sys.c_e(int(e), int(f));
        }
    Matching pm = solve_heuristic(psys);
    int phits = 0;
    for (int i = 0; i < n; ++i) phits += pm.assignment[i] == i;
    CHECK(phits == hits);
}

TEST_CASE("embed_corpus rows are unit norm") {
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.k_neighbors = 3;
    Corpus corpus = generate_corpus(5, 12, 0.5, 64);
    ModelParams p = init_model(cfg);
    Matrix emb = embed_corpus(p, corpus);
    CHECK(emb.rows == 12);
    CHECK(emb.cols == p.enc.embed_dim());
    for (int i = 0; i < emb.rows; ++i)
        CHECK(norm2(emb.row(i), emb.cols) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("duplicate pairs embed closer than random non-duplicates") {
    TrainConfig cfg;
    Corpus corpus = generate_corpus(5, 60, 0.4, 64);
    ModelParams p = init_model(cfg);
    Matrix emb = embed_corpus(p, corpus);

    double dup_cos_sum = 0.0;
    int dup_count = 0;
    double other_cos_sum = 0.0;
    int other_count = 0;
    for (size_t i = 0; i + 1 < corpus.images.size(); ++i) {
        if (corpus.images[i].dup_group != kNoDupGroup &&
            corpus.images[i].dup_group == corpus.images[i + 1].dup_group) {
            dup_cos_sum += dot(emb.row(int(i)), emb.row(int(i) + 1), emb.cols);
            ++dup_count;
        } else {
            other_cos_sum += dot(emb.row(int(i)), emb.row(int(i) + 1), emb.cols);
            ++other_count;
        }
    }
    REQUIRE(dup_count > 0);
    REQUIRE(other_count > 0);
    CHECK(dup_cos_sum / dup_count > other_cos_sum / other_count);
}
