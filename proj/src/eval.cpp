#include "gmssl/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gmssl/errors.hpp"
#include "gmssl/parallel.hpp"

namespace gmssl {

double match_accuracy_once(const AffinitySystem& sys, SolveMode mode, int exact_cap,
                           int heuristic_iters) {
    Matching m = solve_with_mode(sys, mode, exact_cap, heuristic_iters);
    int hits = 0;
    for (int i = 0; i < sys.n; ++i) hits += m.assignment[i] == i;
    return double(hits) / sys.n;
}

namespace {

// one forward + noise-free solve; returns per-vertex correctness
std::vector<char> solve_batch_correct(const ModelParams& params,
                                      const std::vector<SourceImage>& batch,
                                      const TrainConfig& cfg, AblationAxis axis, Rng& rng) {
    BatchForward fb = forward_batch(params, batch, cfg, axis, rng, false);
    SolveMode mode = (axis == AblationAxis::second_order) ? SolveMode::lap_only : cfg.solver_mode;
    Matching m = solve_with_mode(fb.sys, mode, cfg.exact_cap, cfg.heuristic_iters);
    std::vector<char> correct(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) correct[i] = m.assignment[i] == int(i);
    return correct;
}

}  // namespace

MatchEvalResult eval_matching(const ModelParams& params, const Corpus& corpus, int eval_begin,
                              const TrainConfig& cfg, AblationAxis axis, int trials,
                              uint64_t eval_seed) {
    if (trials < 1) throw ParamError("eval_matching: trials must be >= 1");
    int n_eval = int(corpus.images.size()) - eval_begin;
    if (n_eval < cfg.batch_size) throw ParamError("eval_matching: held-out slice too small");

    Rng rng(derive_seed(eval_seed, "eval_matching"));
    double acc_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<SourceImage> batch;
        for (int i : sample_distinct(rng, n_eval, cfg.batch_size))
            batch.push_back(corpus.images[eval_begin + i]);
        auto correct = solve_batch_correct(params, batch, cfg, axis, rng);
        int hits = 0;
        for (char c : correct) hits += c;
        acc_sum += double(hits) / cfg.batch_size;
    }

    MatchEvalResult res;
    res.match_acc = acc_sum / trials;

    // adjacent intact duplicate pairs inside the held-out slice
    std::vector<std::pair<int, int>> dup_pairs;
    std::vector<int> singles;
    for (int i = eval_begin; i < int(corpus.images.size()); ++i) {
        if (corpus.images[i].dup_group != kNoDupGroup && i + 1 < int(corpus.images.size()) &&
            corpus.images[i + 1].dup_group == corpus.images[i].dup_group) {
            dup_pairs.push_back({i, i + 1});
            ++i;
        } else if (corpus.images[i].dup_group == kNoDupGroup) {
            singles.push_back(i);
        }
    }
    if (dup_pairs.empty() || int(singles.size()) < cfg.batch_size - 2) return res;

    double dup_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto [a, b] = dup_pairs[t % dup_pairs.size()];
        std::vector<SourceImage> batch = {corpus.images[a], corpus.images[b]};
        for (int i : sample_distinct(rng, int(singles.size()), cfg.batch_size - 2))
            batch.push_back(corpus.images[singles[i]]);
        auto correct = solve_batch_correct(params, batch, cfg, axis, rng);
        dup_sum += 0.5 * (double(correct[0]) + double(correct[1]));
    }
    res.dup_disambig = dup_sum / trials;
    return res;
}

AffinitySystem random_affinity_system(Rng& rng, int n, double edge_density) {
    AffinitySystem sys;
    sys.n = n;
    sys.c_v = Matrix(n, n);
    for (auto& v : sys.c_v.v) v = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform() < edge_density) sys.edges_s.push_back({i, j});
            if (rng.uniform() < edge_density) sys.edges_t.push_back({i, j});
        }
    sys.c_e = Matrix(int(sys.edges_s.size()), int(sys.edges_t.size()));
    for (auto& v : sys.c_e.v) v = rng.uniform(-1.0, 1.0);
    return sys;
}

SolverQuality solver_quality(int n_instances, int n, Rng& rng) {
    if (n > kDefaultExactCap) throw ParamError("solver_quality: N above exact cap");
    SolverQuality q;
    std::vector<double> exact_ms, heur_ms;
    int within = 0;
    double gap_sum = 0.0;
    for (int t = 0; t < n_instances; ++t) {
        AffinitySystem sys = random_affinity_system(rng, n);
        auto t0 = std::chrono::steady_clock::now();
        Matching ex = solve_exact(sys);
        auto t1 = std::chrono::steady_clock::now();
        Matching he = solve_heuristic(sys);
        auto t2 = std::chrono::steady_clock::now();
        exact_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        heur_ms.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
        double gap = (he.objective - ex.objective) / std::max(std::abs(ex.objective), 1e-9);
        if (gap < -1e-9) throw NumericError("solver_quality: heuristic beat certified optimum");
        gap = std::max(gap, 0.0);
        gap_sum += gap;
        within += gap <= 0.05;
    }
    q.mean_gap = gap_sum / n_instances;
    q.frac_within_5pct = double(within) / n_instances;
    auto median = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    q.exact_ms_median = median(exact_ms);
    q.heuristic_ms_median = median(heur_ms);
    return q;
}

double linear_probe(const Matrix& embeddings, const std::vector<int>& labels,
                    uint64_t split_seed) {
    int n = embeddings.rows, d = embeddings.cols;
    if (int(labels.size()) != n) throw ContractError("linear_probe: label count mismatch");
    int classes = *std::max_element(labels.begin(), labels.end()) + 1;
    {
        std::vector<char> seen(classes, 0);
        for (int l : labels) seen[l] = 1;
        int distinct = 0;
        for (char c : seen) distinct += c;
        if (distinct < 2) throw ParamError("linear_probe: need at least 2 classes");
    }

    Rng rng(derive_seed(split_seed, "probe_split"));
    auto order = sample_distinct(rng, n, n);
    int n_train = std::max(1, int(std::llround(0.8 * n)));
    if (n_train == n) n_train = n - 1;

    // multinomial logistic regression, full-batch gradient descent
    Matrix w(classes, d);
    std::vector<double> bias(classes, 0.0);
    std::vector<double> logits(classes), probs(classes);
    const int iters = 400;
    const double lr = 0.5;
    for (int it = 0; it < iters; ++it) {
        Matrix gw(classes, d);
        std::vector<double> gb(classes, 0.0);
        for (int k = 0; k < n_train; ++k) {
            int i = order[k];
            const double* x = embeddings.row(i);
            double mx = -1e300;
            for (int c = 0; c < classes; ++c) {
                logits[c] = bias[c] + dot(w.row(c), x, d);
                mx = std::max(mx, logits[c]);
            }
            double z = 0.0;
            for (int c = 0; c < classes; ++c) z += (probs[c] = std::exp(logits[c] - mx));
            for (int c = 0; c < classes; ++c) {
                double g = probs[c] / z - (labels[i] == c ? 1.0 : 0.0);
                gb[c] += g;
                for (int j = 0; j < d; ++j) gw(c, j) += g * x[j];
            }
        }
        for (int c = 0; c < classes; ++c) {
            bias[c] -= lr * gb[c] / n_train;
            for (int j = 0; j < d; ++j) w(c, j) -= lr * gw(c, j) / n_train;
        }
    }

    int hits = 0, total = 0;
    for (int k = n_train; k < n; ++k) {
        int i = order[k];
        const double* x = embeddings.row(i);
        int best = 0;
        double bestv = -1e300;
        for (int c = 0; c < classes; ++c) {
            double v = bias[c] + dot(w.row(c), x, d);
            if (v > bestv) {
                bestv = v;
                best = c;
            }
        }
        hits += best == labels[i];
        ++total;
    }
    return total ? double(hits) / total : 0.0;
}

AffinitySystem grad_check_instance(int n) {
    if (n < 2 || n > 6) throw ParamError("grad_check_instance: n must be in [2,6]");
    AffinitySystem sys;
    sys.n = n;
    sys.c_v = Matrix(n, n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
            if (a == i)
                sys.c_v(i, a) = 0.9;
            else if ((i == 0 && a == 1) || (i == 1 && a == 0))
                sys.c_v(i, a) = 0.8;  // near-tie with the (0 1) swap
            else
                sys.c_v(i, a) = 0.1 + 0.05 * ((i * 7 + a * 3) % 4);
        }
    sys.c_e = Matrix(0, 0);
    return sys;
}

GradCheckResult imle_grad_check(int n, int samples, double lambda, int oracle_samples,
                                uint64_t seed) {
    AffinitySystem sys = grad_check_instance(n);
    std::vector<int> gold(n);
    for (int i = 0; i < n; ++i) gold[i] = i;
    Matrix loss_grad = hamming_loss_grad(gold);

    GradCheckResult res;
    res.imle_mean = Matrix(n, n);
    Rng rng(derive_seed(seed, "imle_grad"));
    for (int s = 0; s < samples; ++s) {
        auto [m, st] = imle_forward(sys, SolveMode::exact, lambda, 1.0, rng);
        ImleGrads g = imle_backward(st, loss_grad);
        for (size_t i = 0; i < g.dc_v.v.size(); ++i) res.imle_mean.v[i] += g.dc_v.v[i] / samples;
    }

    // oracle: enumerate permutations directly (independent of the solvers) and
    // take common-random-numbers central differences of E[L]
    std::vector<std::vector<int>> perms;
    {
        std::vector<int> p = gold;
        do {
            perms.push_back(p);
        } while (std::next_permutation(p.begin(), p.end()));
    }
    auto loss_of = [&](const std::vector<int>& p) {
        int mism = 0;
        for (int i = 0; i < n; ++i) mism += p[i] != i;
        return 2.0 * mism;
    };

    const double h = 0.05;
    res.oracle = Matrix(n, n);
    Rng orng(derive_seed(seed, "oracle_noise"));
    std::vector<double> score(perms.size());
    for (int s = 0; s < oracle_samples; ++s) {
        Matrix eps(n, n);
        auto draw = gumbel_sample(orng, eps.v.size());
        eps.v = std::move(draw);
        for (size_t p = 0; p < perms.size(); ++p) {
            double total = 0.0;
            for (int i = 0; i < n; ++i)
                total += sys.c_v(i, perms[p][i]) + eps(i, perms[p][i]);
            score[p] = total;
        }
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a) {
                double best_up = -1e300, best_dn = -1e300;
                size_t arg_up = 0, arg_dn = 0;
                for (size_t p = 0; p < perms.size(); ++p) {
                    double up = score[p] + (perms[p][i] == a ? h : 0.0);
                    double dn = score[p] - (perms[p][i] == a ? h : 0.0);
                    if (up > best_up) {
                        best_up = up;
                        arg_up = p;
                    }
                    if (dn > best_dn) {
                        best_dn = dn;
                        arg_dn = p;
                    }
                }
                res.oracle(i, a) +=
                    (loss_of(perms[arg_up]) - loss_of(perms[arg_dn])) / (2.0 * h) / oracle_samples;
            }
    }

    double uv = dot(res.imle_mean.v.data(), res.oracle.v.data(), n * n);
    double nu = norm2(res.imle_mean.v.data(), n * n);
    double nv = norm2(res.oracle.v.data(), n * n);
    res.cosine_sim = (nu * nv < 1e-12) ? 0.0 : uv / (nu * nv);
    return res;
}

Matrix embed_corpus(const ModelParams& params, const Corpus& corpus) {
    TransformSpec spec = identity_spec(corpus.canvas);
    spec.normalize = true;
    int F = params.enc.embed_dim();
    Matrix out(int(corpus.images.size()), F);
    parallel_for(corpus.images.size(), [&](size_t i) {
        View v = apply(corpus.images[i].pixels, spec);
        ForwardTrace t = encoder_forward(params.enc, v.pixels);
        std::copy(t.z.begin(), t.z.end(), out.row(int(i)));
    });
    return out;
}

}  // namespace gmssl
