#include "doctest.h"
#include "gmssl/imle.hpp"
#include "gmssl/errors.hpp"
#include "test_support.hpp"

#include <cmath>
#include <map>

using namespace gmssl;

namespace {

// 3-node instance with a near-tie between the identity and the (0 1) swap
AffinitySystem near_tie_instance() {
    AffinitySystem sys;
    sys.n = 3;
    sys.c_v = Matrix(3, 3);
    double vals[3][3] = {{0.9, 0.8, 0.1}, {0.8, 0.9, 0.2}, {0.1, 0.2, 0.9}};
    for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 3; ++a) sys.c_v(i, a) = vals[i][a];
    sys.c_e = Matrix(0, 0);
    return sys;
}

std::vector<int> gold3 = {0, 1, 2};

}  // namespace

TEST_CASE("gumbel sampler matches the analytic moments") {
    Rng rng(1);
    const size_t n = 1000000;
    auto xs = gumbel_sample(rng, n);
    double sum = 0.0, sq = 0.0;
    for (double x : xs) {
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 0.5772156649) < 0.01);
    CHECK(std::abs(var - 1.6449340668) < 0.02);

    Rng r1(9), r2(9);
    CHECK(gumbel_sample(r1, 100) == gumbel_sample(r2, 100));
}

TEST_CASE("zero noise forward equals the unperturbed solve") {
    AffinitySystem sys = near_tie_instance();
    Rng rng(2);
    auto [m, st] = imle_forward(sys, SolveMode::exact, 80.0, 0.0, rng);
    Matching plain = solve_exact(sys);
    CHECK(m.assignment == plain.assignment);
    CHECK(m.objective == doctest::Approx(plain.objective));
}

TEST_CASE("fresh noise spreads solutions over permutations on a near-tie") {
    AffinitySystem sys = near_tie_instance();
    Rng rng(3);
    std::map<std::vector<int>, int> histogram;
    for (int t = 0; t < 500; ++t) {
        auto [m, st] = imle_forward(sys, SolveMode::exact, 80.0, 1.0, rng);
        histogram[m.assignment]++;
    }
    CHECK(histogram.size() >= 2);
    // the two near-tied permutations both get substantial mass
    CHECK(histogram[{0, 1, 2}] > 50);
    CHECK(histogram[{1, 0, 2}] > 50);
}

TEST_CASE("hamming loss counting identities") {
    Matching m;
    m.assignment = {0, 1, 2, 3};
    CHECK(hamming_loss(m, std::vector<int>{0, 1, 2, 3}) == 0.0);
    m.assignment = {1, 0, 3, 2};
    CHECK(hamming_loss(m, std::vector<int>{0, 1, 2, 3}) == 8.0);
    m.assignment = {1, 0, 2, 3};
    CHECK(hamming_loss(m, std::vector<int>{0, 1, 2, 3}) == 4.0);
    m.assignment = {0, 1};
    CHECK_THROWS_AS(hamming_loss(m, std::vector<int>{0, 1, 2}), ContractError);
}

TEST_CASE("hamming loss equals 2x mismatches for every N<=5 permutation pair") {
    for (int n = 2; n <= 5; ++n) {
        auto perms = testsup::all_permutations(n);
        for (const auto& a : perms)
            for (const auto& b : perms) {
                Matching m;
                m.assignment = a;
                int mismatch = 0;
                for (int i = 0; i < n; ++i) mismatch += a[i] != b[i];
                CHECK(hamming_loss(m, b) == 2.0 * mismatch);
            }
    }
}

TEST_CASE("hamming gradient is -1 on gold entries and +1 elsewhere") {
    Matrix g = hamming_loss_grad(gold3);
    for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 3; ++a) CHECK(g(i, a) == (a == i ? -1.0 : 1.0));
}

TEST_CASE("zero loss gradient yields an exactly zero imle gradient") {
    AffinitySystem sys = near_tie_instance();
    Rng rng(4);
    auto [m, st] = imle_forward(sys, SolveMode::exact, 80.0, 1.0, rng);
    Matrix zero(3, 3);
    ImleGrads g = imle_backward(st, zero);
    for (double v : g.dc_v.v) CHECK(v == 0.0);
}

TEST_CASE("backward refuses a second call on the same state") {
    AffinitySystem sys = near_tie_instance();
    Rng rng(5);
    auto [m, st] = imle_forward(sys, SolveMode::exact, 80.0, 1.0, rng);
    Matrix g = hamming_loss_grad(gold3);
    imle_backward(st, g);
    CHECK_THROWS_AS(imle_backward(st, g), ContractError);
}

TEST_CASE("single-sample gradients live on the +-1/lambda lattice and sum to zero") {
    AffinitySystem sys = near_tie_instance();
    Rng rng(6);
    const double lambda = 80.0;
    for (int t = 0; t < 50; ++t) {
        auto [m, st] = imle_forward(sys, SolveMode::exact, lambda, 1.0, rng);
        ImleGrads g = imle_backward(st, hamming_loss_grad(gold3));
        double sum = 0.0;
        for (double v : g.dc_v.v) {
            bool on_lattice = std::abs(v) < 1e-15 || std::abs(std::abs(v) - 1.0 / lambda) < 1e-15;
            CHECK(on_lattice);
            sum += v;
        }
        CHECK(std::abs(sum) < 1e-12);  // both indicators have N ones
    }
}

TEST_CASE("small lambda with zero noise returns exactly zero on a stable instance") {
    AffinitySystem sys = near_tie_instance();
    sys.c_v(0, 0) = 2.0;  // make the optimum locally constant
    Rng rng(7);
    auto [m, st] = imle_forward(sys, SolveMode::exact, 1e-6, 0.0, rng);
    ImleGrads g = imle_backward(st, hamming_loss_grad(gold3));
    for (double v : g.dc_v.v) CHECK(v == 0.0);
}

TEST_CASE("estimator variance shrinks like 1/M") {
    AffinitySystem sys = near_tie_instance();
    Rng rng(8);
    const double lambda = 80.0;
    auto mean_grad = [&](int M) {
        Matrix acc(3, 3);
        for (int m = 0; m < M; ++m) {
            auto [v, st] = imle_forward(sys, SolveMode::exact, lambda, 1.0, rng);
            ImleGrads g = imle_backward(st, hamming_loss_grad(gold3));
            for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += g.dc_v.v[i] / M;
        }
        return acc;
    };
    auto total_variance = [&](int M, int reps) {
        std::vector<Matrix> means;
        for (int r = 0; r < reps; ++r) means.push_back(mean_grad(M));
        double var = 0.0;
        for (size_t i = 0; i < 9; ++i) {
            double mu = 0.0;
            for (auto& m : means) mu += m.v[i] / reps;
            for (auto& m : means) var += (m.v[i] - mu) * (m.v[i] - mu) / reps;
        }
        return var;
    };
    double v10 = total_variance(10, 60);
    double v100 = total_variance(100, 60);
    CHECK(v10 / v100 >= 5.0);
    double v1000 = total_variance(1000, 20);
    CHECK(v100 / v1000 >= 5.0);
}

TEST_CASE("constant offset replaces noise in the ablation path") {
    const double offset = 0.5772156649015329;
    AffinitySystem sys = near_tie_instance();
    Rng r1(9), r2(10);
    auto [m1, s1] = imle_forward(sys, SolveMode::exact, 80.0, 0.0, r1, offset);
    auto [m2, s2] = imle_forward(sys, SolveMode::exact, 80.0, 0.0, r2, offset);
    CHECK(m1.assignment == m2.assignment);  // deterministic path
    for (double v : s1.noise_v.v) CHECK(v == offset);
}
