// gm-ssl: corpus generation, pretraining, standalone solving, gradient
// checking, evaluation, ablations and embedding export.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "gmssl/config.hpp"
#include "gmssl/errors.hpp"
#include "gmssl/eval.hpp"
#include "gmssl/instance_io.hpp"
#include "gmssl/parallel.hpp"
#include "gmssl/sha1.hpp"
#include "gmssl/trainer.hpp"

using namespace gmssl;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> epochs;
    std::optional<int> corpus_count;
    std::optional<double> dup_fraction;
    std::optional<std::string> solver_mode;
    std::optional<double> noise_scale;
    std::optional<int> batch_size;
    std::optional<double> lambda;
    std::optional<double> alpha;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "flat key = value config file");
    cmd->add_option("--seed", o.seed, "root seed (overrides config and GMSSL_SEED)");
    cmd->add_option("--threads", o.threads, "cap internal parallelism (0 = hardware)");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--corpus-count", o.corpus_count, "synthetic corpus size");
    cmd->add_option("--dup-fraction", o.dup_fraction, "near-duplicate share of the corpus");
    cmd->add_option("--solver-mode", o.solver_mode, "exact | heuristic | lap");
    cmd->add_option("--noise-scale", o.noise_scale, "Gumbel noise scale");
    cmd->add_option("--batch-size", o.batch_size, "graph size N");
    cmd->add_option("--lambda", o.lambda, "IMLE finite-difference step size");
    cmd->add_option("--alpha", o.alpha, "global/local affinity blend");
}

TrainConfig resolve_config(const CommonOpts& o) {
    TrainConfig cfg;
    if (!o.config_path.empty()) cfg = load_config(o.config_path);
    if (const char* env = std::getenv("GMSSL_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) cfg.threads = *o.threads;
    if (o.epochs) cfg.epochs = *o.epochs;
    if (o.corpus_count) cfg.corpus_count = *o.corpus_count;
    if (o.dup_fraction) cfg.dup_fraction = *o.dup_fraction;
    if (o.solver_mode) cfg.solver_mode = solve_mode_from_string(*o.solver_mode);
    if (o.noise_scale) cfg.noise_scale = *o.noise_scale;
    if (o.batch_size) cfg.batch_size = *o.batch_size;
    if (o.lambda) cfg.lambda = *o.lambda;
    if (o.alpha) cfg.alpha = *o.alpha;
    set_thread_cap(cfg.threads);
    return cfg;
}

void write_manifest(const std::string& out_dir, const TrainConfig& cfg, const char* argv0) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/manifest.txt");
    if (!f) throw ParamError("cannot write manifest in " + out_dir);
    std::string binary = argv0;
    std::error_code ec;
    auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
    if (!ec) binary = self.string();
    f << "# gm-ssl run manifest; the key = value body reproduces the run\n";
    f << "# binary_hash = " << git_blob_hash(binary) << "\n";
    std::time_t now = std::time(nullptr);
    char ts[64];
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    f << "# start_time = " << ts << "\n";
    f << config_to_text(cfg);
}

int cmd_gen_corpus(uint64_t seed, int count, double dup_fraction, const std::string& out) {
    Corpus corpus = generate_corpus(seed, count, dup_fraction);
    write_corpus(corpus, out);
    std::printf("wrote %d images and manifest.txt to %s\n", count, out.c_str());
    return 0;
}

int cmd_pretrain(const TrainConfig& cfg, const std::string& out, const std::string& ablate,
                 const char* argv0) {
    AblationAxis axis = ablate.empty() ? AblationAxis::full : ablation_from_string(ablate);
    write_manifest(out, cfg, argv0);
    std::ofstream metrics(out + "/metrics.tsv");
    if (!metrics) throw ParamError("cannot open metrics.tsv in " + out);
    TrainResult tr = pretrain(cfg, axis, &metrics, true, out);
    MatchEvalResult ev = eval_matching(tr.params, tr.corpus, tr.holdout_begin, cfg, axis, 32,
                                       derive_seed(cfg.seed, "eval"));
    std::fprintf(stderr, "held-out match_acc = %.4f\n", ev.match_acc);
    if (ev.dup_disambig)
        std::fprintf(stderr, "held-out dup_disambig = %.4f\n", *ev.dup_disambig);
    return 0;
}

int cmd_solve(const std::string& mode_str, const std::string& instance_path) {
    AffinitySystem sys = read_instance(instance_path);
    SolveMode mode = solve_mode_from_string(mode_str);
    Matching m = solve_with_mode(sys, mode);
    std::printf("assignment:");
    for (int a : m.assignment) std::printf(" %d", a);
    std::printf("\nobjective: %.9g\n", m.objective);
    return 0;
}

int cmd_grad_check(int n, int samples, double lambda, int oracle_samples, uint64_t seed) {
    GradCheckResult r = imle_grad_check(n, samples, lambda, oracle_samples, seed);
    std::printf("imle mean gradient (%d samples):\n", samples);
    for (int i = 0; i < r.imle_mean.rows; ++i) {
        for (int j = 0; j < r.imle_mean.cols; ++j) std::printf(" % .6f", r.imle_mean(i, j));
        std::printf("\n");
    }
    std::printf("oracle gradient (%d samples):\n", oracle_samples);
    for (int i = 0; i < r.oracle.rows; ++i) {
        for (int j = 0; j < r.oracle.cols; ++j) std::printf(" % .6f", r.oracle(i, j));
        std::printf("\n");
    }
    std::printf("cosine_similarity: %.4f\n", r.cosine_sim);
    return 0;
}

int cmd_eval_matching(const TrainConfig& cfg, const std::string& checkpoint, int trials) {
    ModelParams params = load_model(checkpoint);
    Corpus corpus = generate_corpus(cfg.seed, cfg.corpus_count, cfg.dup_fraction, cfg.canvas);
    int holdout = int(std::llround(cfg.eval_fraction * cfg.corpus_count));
    int begin = cfg.corpus_count - holdout;
    MatchEvalResult ev = eval_matching(params, corpus, begin, cfg, AblationAxis::full, trials,
                                       derive_seed(cfg.seed, "eval"));
    Rng rng(derive_seed(cfg.seed, "solver_quality"));
    SolverQuality q = solver_quality(50, 6, rng);
    Matrix emb = embed_corpus(params, corpus);
    std::vector<int> labels;
    for (auto& im : corpus.images) labels.push_back(im.class_tag);
    double probe = linear_probe(emb, labels, derive_seed(cfg.seed, "probe"));

    std::printf("match_acc=%.6f\n", ev.match_acc);
    if (ev.dup_disambig)
        std::printf("dup_disambig=%.6f\n", *ev.dup_disambig);
    else
        std::printf("dup_disambig=absent\n");
    std::printf("solver_gap=%.6f\n", q.mean_gap);
    std::printf("probe_acc=%.6f\n", probe);
    return 0;
}

int cmd_ablate(const TrainConfig& cfg, const std::string& axis_str) {
    std::vector<AblationAxis> axes;
    if (axis_str == "all") {
        axes = {AblationAxis::full, AblationAxis::second_order, AblationAxis::message_passing,
                AblationAxis::gumbel, AblationAxis::local_sim};
    } else {
        axes = {ablation_from_string(axis_str)};
    }
    std::printf("axis\tmatch_acc\tdup_disambig\n");
    for (AblationAxis axis : axes) {
        AblationRow row = run_ablation(cfg, axis);
        std::printf("%s\t%.6f\t%s\n", to_string(axis).c_str(), row.match_acc,
                    row.dup_disambig ? std::to_string(*row.dup_disambig).c_str() : "absent");
    }
    return 0;
}

int cmd_export(const TrainConfig& cfg, const std::string& checkpoint, const std::string& out) {
    ModelParams params = load_model(checkpoint);
    Corpus corpus = generate_corpus(cfg.seed, cfg.corpus_count, cfg.dup_fraction, cfg.canvas);
    Matrix emb = embed_corpus(params, corpus);
    auto parent = std::filesystem::path(out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(out);
    if (!f) throw ParamError("cannot open " + out);
    char buf[64];
    f << emb.rows << " " << emb.cols << "\n";
    for (int i = 0; i < emb.rows; ++i) {
        for (int j = 0; j < emb.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", emb(i, j));
            f << buf << (j + 1 == emb.cols ? "" : " ");
        }
        f << "\n";
    }
    std::printf("wrote %d embeddings of dim %d to %s\n", emb.rows, emb.cols, out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-supervised pretraining via second-order graph matching"};
    app.require_subcommand(1);

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus as PGM files");
    uint64_t gen_seed = 7;
    int gen_count = 100;
    double gen_dup = 0.0;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "corpus seed");
    gen->add_option("--count", gen_count, "number of images")->required();
    gen->add_option("--dup-fraction", gen_dup, "near-duplicate share");
    gen->add_option("--out", gen_out, "output directory")->required();

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "run the SSL training loop");
    CommonOpts pre_opts;
    add_common(pre, pre_opts);
    std::string pre_out, pre_ablate;
    pre->add_option("--out", pre_out, "output directory")->required();
    pre->add_option("--ablate", pre_ablate,
                    "disable one component: second_order|message_passing|gumbel|local_sim");

    // solve
    auto* solve = app.add_subcommand("solve", "solve a standalone matching instance");
    std::string solve_mode = "heuristic", solve_instance;
    solve->add_option("--mode", solve_mode, "exact | heuristic | lap");
    solve->add_option("--instance", solve_instance, "instance file")->required();

    // grad-check
    auto* grad = app.add_subcommand("grad-check", "IMLE estimate vs enumeration oracle");
    int gc_n = 3, gc_samples = 1000, gc_oracle = 100000;
    double gc_lambda = 80.0;
    uint64_t gc_seed = 7;
    grad->add_option("--n", gc_n, "instance size");
    grad->add_option("--samples", gc_samples, "IMLE samples");
    grad->add_option("--lambda", gc_lambda, "IMLE step size");
    grad->add_option("--oracle-samples", gc_oracle, "Monte-Carlo oracle draws");
    grad->add_option("--seed", gc_seed, "seed");

    // eval-matching
    auto* ev = app.add_subcommand("eval-matching", "report EvalReport key=value lines");
    CommonOpts ev_opts;
    add_common(ev, ev_opts);
    std::string ev_checkpoint;
    int ev_trials = 32;
    ev->add_option("--checkpoint", ev_checkpoint, "model checkpoint")->required();
    ev->add_option("--trials", ev_trials, "evaluation trials");

    // ablate
    auto* abl = app.add_subcommand("ablate", "train with one component disabled");
    CommonOpts abl_opts;
    add_common(abl, abl_opts);
    std::string abl_axis = "all";
    abl->add_option("--axis", abl_axis,
                    "full|second_order|message_passing|gumbel|local_sim|all");

    // export-embeddings
    auto* exp = app.add_subcommand("export-embeddings", "embed the corpus with a checkpoint");
    CommonOpts exp_opts;
    add_common(exp, exp_opts);
    std::string exp_checkpoint, exp_out;
    exp->add_option("--checkpoint", exp_checkpoint, "model checkpoint")->required();
    exp->add_option("--out", exp_out, "output text file")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_corpus(gen_seed, gen_count, gen_dup, gen_out);
        if (pre->parsed()) return cmd_pretrain(resolve_config(pre_opts), pre_out, pre_ablate, argv[0]);
        if (solve->parsed()) return cmd_solve(solve_mode, solve_instance);
        if (grad->parsed()) return cmd_grad_check(gc_n, gc_samples, gc_lambda, gc_oracle, gc_seed);
        if (ev->parsed()) return cmd_eval_matching(resolve_config(ev_opts), ev_checkpoint, ev_trials);
        if (abl->parsed()) return cmd_ablate(resolve_config(abl_opts), abl_axis);
        if (exp->parsed()) return cmd_export(resolve_config(exp_opts), exp_checkpoint, exp_out);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message
        return 1;
    } catch (const CapabilityError& e) {
        std::fprintf(stderr, "refused: %s\n", e.what());
        return 2;
    } catch (const ParamError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
