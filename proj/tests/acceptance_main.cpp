// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. `--only <substring>` restricts the run while debugging.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gmssl/eval.hpp"
#include "gmssl/imle.hpp"
#include "gmssl/matcher.hpp"
#include "gmssl/trainer.hpp"
#include "test_support.hpp"

using namespace gmssl;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

// ---------------------------------------------------------------------------

bool solver_correctness(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(2024);
    int exact_ok = 0, heur_ok = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        AffinitySystem sys = random_affinity_system(rng, 6);
        Matching ex = solve_exact(sys);
        auto oracle = testsup::brute_force_match(sys);
        if (ex.assignment == oracle.assignment &&
            std::abs(ex.objective - oracle.objective) < 1e-9)
            ++exact_ok;
        Matching he = solve_heuristic(sys);
        double gap = (he.objective - ex.objective) / std::max(std::abs(ex.objective), 1e-9);
        if (gap <= 0.05 + 1e-12) ++heur_ok;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[160];
    std::snprintf(buf, sizeof buf, "exact %d/%d, heuristic within 5%%: %d/%d, %.1f s",
                  exact_ok, trials, heur_ok, trials, secs);
    detail = buf;
    return exact_ok == trials && heur_ok >= int(0.95 * trials) && secs < 60.0;
}

bool lap_reduction(std::string& detail) {
    Rng rng(11);
    int ok = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        AffinitySystem sys = random_affinity_system(rng, 6);
        std::fill(sys.c_e.v.begin(), sys.c_e.v.end(), 0.0);
        Matching ex = solve_exact(sys);
        Matching he = solve_heuristic(sys);
        Matching lap = solve_lap(sys.c_v);
        if (ex.objective == he.objective && he.objective == lap.objective) ++ok;
    }
    detail = std::to_string(ok) + "/" + std::to_string(trials) + " identical objectives";
    return ok == trials;
}

bool permutation_feasibility(std::string& detail) {
    Rng rng(31);
    int violations = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        int n = 2 + int(rng.uniform_int(7));
        AffinitySystem sys = random_affinity_system(rng, n);
        Matching m;
        switch (t % 3) {
            case 0: m = solve_lap(sys.c_v); break;
            case 1: m = solve_heuristic(sys); break;
            default: m = (n <= 7) ? solve_exact(sys) : solve_heuristic(sys); break;
        }
        std::vector<char> seen(n, 0);
        bool feasible = int(m.assignment.size()) == n;
        for (int a : m.assignment) {
            if (a < 0 || a >= n || seen[a]) {
                feasible = false;
                break;
            }
            seen[a] = 1;
        }
        if (!feasible) ++violations;
    }
    detail = std::to_string(violations) + " violations in " + std::to_string(trials);
    return violations == 0;
}

bool gradient_fidelity(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(404);
    double worst = 0.0;
    size_t checked = 0;

    {  // encoder probe
        EncoderParams p = init_encoder(rng);
        Image img(64, 64);
        for (auto& v : img.v) v = rng.uniform(-1.0, 1.0);
        std::vector<double> u(32);
        for (auto& x : u) x = rng.uniform(-1.0, 1.0);
        Tensor3 V(32, 8, 8);
        for (auto& x : V.v) x = rng.uniform(-1.0, 1.0);
        auto eval = [&] {
            ForwardTrace t = encoder_forward(p, img);
            double L = 0.0;
            for (int f = 0; f < 32; ++f) L += u[f] * t.z[f];
            const Tensor3& y = t.act.back();
            for (size_t i = 0; i < y.v.size(); ++i) L += V.v[i] * y.v[i];
            return L;
        };
        ForwardTrace t = encoder_forward(p, img);
        EncoderGrads g = encoder_backward(p, t, V, u);
        const double h = 1e-4;
        auto check = [&](double analytic, double* slot) {
            double fd = testsup::central_diff(eval, slot, h);
            worst = std::max(worst, testsup::rel_err(analytic, fd));
            ++checked;
        };
        // biases, projector and a fixed stride of each weight tensor
        for (size_t l = 0; l < p.conv.size(); ++l) {
            for (size_t i = 0; i < p.conv[l].b.size(); ++i) check(g.conv_b[l][i], &p.conv[l].b[i]);
            size_t stride = std::max<size_t>(1, p.conv[l].w.size() / 64);
            for (size_t i = 0; i < p.conv[l].w.size(); i += stride)
                check(g.conv_w[l][i], &p.conv[l].w[i]);
        }
        for (size_t i = 0; i < p.proj_w.v.size(); i += 4) check(g.proj_w.v[i], &p.proj_w.v[i]);
        for (size_t i = 0; i < p.proj_b.size(); ++i) check(g.proj_b[i], &p.proj_b[i]);
    }

    {  // gcn probe: every parameter and every feature entry
        Matrix x(8, 16);
        for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);
        BatchGraph g = knn_graph(x, 3);
        GcnParams p = init_gcn(rng, 16, 16);
        Matrix u(8, 16);
        for (auto& v : u.v) v = rng.uniform(-1.0, 1.0);
        auto eval = [&] {
            BatchGraph gg = g;
            gg.x = x;
            Matrix out = gcn_forward(gg, p);
            double L = 0.0;
            for (size_t i = 0; i < out.v.size(); ++i) L += u.v[i] * out.v[i];
            return L;
        };
        BatchGraph gx = g;
        gx.x = x;
        GcnTrace tr;
        gcn_forward(gx, p, &tr);
        GcnGrads grads = gcn_backward(gx, p, tr, u);
        const double h = 1e-4;
        for (size_t l = 0; l < p.layers.size(); ++l)
            for (size_t i = 0; i < p.layers[l].v.size(); ++i) {
                double fd = testsup::central_diff(eval, &p.layers[l].v[i], h);
                worst = std::max(worst, testsup::rel_err(grads.layers[l].v[i], fd));
                ++checked;
            }
        for (size_t i = 0; i < x.v.size(); ++i) {
            double fd = testsup::central_diff(eval, &x.v[i], h);
            worst = std::max(worst, testsup::rel_err(grads.x.v[i], fd));
            ++checked;
        }
    }

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu derivatives, worst rel err %.2e, %.1f s", checked,
                  worst, secs);
    detail = buf;
    return worst < 1e-4 && secs < 30.0;
}

bool imle_estimator_quality(std::string& detail) {
    GradCheckResult r = imle_grad_check(3, 1000, 80.0, 100000, 7);

    // variance of the M-sample mean must drop >= 5x from M=10 to M=100
    AffinitySystem sys = grad_check_instance(3);
    std::vector<int> gold = {0, 1, 2};
    Matrix lg = hamming_loss_grad(gold);
    Rng rng(99);
    auto mean_grad = [&](int M) {
        Matrix acc(3, 3);
        for (int m = 0; m < M; ++m) {
            auto [v, st] = imle_forward(sys, SolveMode::exact, 80.0, 1.0, rng);
            ImleGrads g = imle_backward(st, lg);
            for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += g.dc_v.v[i] / M;
        }
        return acc;
    };
    auto total_var = [&](int M, int reps) {
        std::vector<Matrix> means;
        for (int rep = 0; rep < reps; ++rep) means.push_back(mean_grad(M));
        double var = 0.0;
        for (int i = 0; i < 9; ++i) {
            double mu = 0.0;
            for (auto& m : means) mu += m.v[i] / reps;
            for (auto& m : means) var += (m.v[i] - mu) * (m.v[i] - mu) / reps;
        }
        return var;
    };
    double v10 = total_var(10, 80), v100 = total_var(100, 80);
    double ratio = v10 / v100;

    char buf[120];
    std::snprintf(buf, sizeof buf, "cosine %.3f, variance ratio M10/M100 = %.1f", r.cosine_sim,
                  ratio);
    detail = buf;
    return r.cosine_sim >= 0.8 && ratio >= 5.0;
}

bool gumbel_moments(std::string& detail) {
    Rng rng(123);
    const size_t n = 1000000;
    auto xs = gumbel_sample(rng, n);
    double sum = 0.0, sq = 0.0;
    for (double x : xs) {
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    char buf[120];
    std::snprintf(buf, sizeof buf, "mean %.4f (target 0.5772), var %.4f (target 1.6449)", mean,
                  var);
    detail = buf;
    return std::abs(mean - 0.5772156649) < 0.01 && std::abs(var - 1.6449340668) < 0.02;
}

bool end_to_end_learning(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    TrainConfig cfg;  // defaults: N=16, k=5, alpha=0.8, lambda=80, seed 7, 2000 images
    cfg.epochs = 30;
    TrainResult tr = pretrain(cfg);
    MatchEvalResult ev = eval_matching(tr.params, tr.corpus, tr.holdout_begin, cfg,
                                       AblationAxis::full, 40, derive_seed(cfg.seed, "eval"));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[120];
    std::snprintf(buf, sizeof buf, "held-out match_acc %.3f (chance 0.0625), %.0f s", ev.match_acc,
                  secs);
    detail = buf;
    return ev.match_acc >= 0.9 && secs <= 1800.0;
}

TrainConfig ablation_pair_config(uint64_t seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.corpus_count = 360;
    cfg.dup_fraction = 0.25;
    cfg.epochs = 10;
    cfg.eval_fraction = 0.3;
    return cfg;
}

bool table5_second_order(std::string& detail) {
    int wins = 0;
    std::ostringstream log;
    for (int s = 0; s < 5; ++s) {
        TrainConfig cfg = ablation_pair_config(7 + s);
        AblationRow full = run_ablation(cfg, AblationAxis::full, 60);
        AblationRow lap = run_ablation(cfg, AblationAxis::second_order, 60);
        if (!full.dup_disambig || !lap.dup_disambig) {
            detail = "dup metric unavailable";
            return false;
        }
        log << " [" << *full.dup_disambig << " vs " << *lap.dup_disambig << "]";
        if (*full.dup_disambig > *lap.dup_disambig) ++wins;
    }
    detail = "full > lap-only on " + std::to_string(wins) + "/5 paired seeds" + log.str() +
             " (sign test needs 5)";
    return wins == 5;  // one-sided sign test: p = 0.5^5 = 0.031 < 0.05
}

bool table5_gumbel(std::string& detail) {
    int ok = 0;
    std::ostringstream log;
    for (int s = 0; s < 5; ++s) {
        TrainConfig cfg = ablation_pair_config(7 + s);
        AblationRow full = run_ablation(cfg, AblationAxis::full, 60);
        AblationRow nonoise = run_ablation(cfg, AblationAxis::gumbel, 60);
        log << " [" << full.match_acc << " vs " << nonoise.match_acc << "]";
        if (full.match_acc >= nonoise.match_acc) ++ok;
    }
    detail = "full >= no-noise on " + std::to_string(ok) + "/5 paired seeds" + log.str();
    return ok == 5;
}

bool hamming_identities(std::string& detail) {
    for (int n = 2; n <= 5; ++n) {
        auto perms = testsup::all_permutations(n);
        for (const auto& a : perms)
            for (const auto& b : perms) {
                Matching m;
                m.assignment = a;
                int mismatch = 0;
                for (int i = 0; i < n; ++i) mismatch += a[i] != b[i];
                if (hamming_loss(m, b) != 2.0 * mismatch) {
                    detail = "mismatch at n=" + std::to_string(n);
                    return false;
                }
            }
    }
    detail = "all permutation pairs up to N=5";
    return true;
}

bool determinism(std::string& detail) {
    TrainConfig cfg;
    cfg.corpus_count = 200;
    cfg.epochs = 2;
    auto run = [&] {
        std::ostringstream metrics;
        pretrain(cfg, AblationAxis::full, &metrics);
        return metrics.str();
    };
    std::string a = run(), b = run();
    detail = "two runs, " + std::to_string(a.size()) + " metric bytes";
    return !a.empty() && a == b;
}

}  // namespace

int main(int argc, char** argv) {
    std::string only;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = argv[i + 1];

    std::vector<Criterion> criteria = {
        {"solver-correctness", solver_correctness},
        {"lap-reduction", lap_reduction},
        {"permutation-feasibility", permutation_feasibility},
        {"gradient-fidelity", gradient_fidelity},
        {"imle-estimator-quality", imle_estimator_quality},
        {"gumbel-moments", gumbel_moments},
        {"hamming-identities", hamming_identities},
        {"determinism", determinism},
        {"table5-second-order", table5_second_order},
        {"table5-gumbel", table5_gumbel},
        {"end-to-end-learning", end_to_end_learning},
    };

    int failures = 0, ran = 0;
    for (auto& c : criteria) {
        if (!only.empty() && c.name.find(only) == std::string::npos) continue;
        ++ran;
        std::string detail;
        bool ok = false;
        auto t0 = std::chrono::steady_clock::now();
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s - %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", c.name.c_str(), secs,
                    detail.empty() ? "" : ": ", detail.c_str());
        std::fflush(stdout);
        failures += !ok;
    }
    if (ran == 0) {
        std::printf("no criteria matched filter '%s'\n", only.c_str());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
