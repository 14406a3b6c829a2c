#include "gmssl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "gmssl/checkpoint.hpp"
#include "gmssl/errors.hpp"
#include "gmssl/eval.hpp"
#include "gmssl/instance_io.hpp"
#include "gmssl/parallel.hpp"

namespace gmssl {

namespace {
double f32(double x) { return double(float(x)); }
}

std::string to_string(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::full: return "full";
        case AblationAxis::second_order: return "second_order";
        case AblationAxis::message_passing: return "message_passing";
        case AblationAxis::gumbel: return "gumbel";
        default: return "local_sim";
    }
}

AblationAxis ablation_from_string(const std::string& s) {
    if (s == "full") return AblationAxis::full;
    if (s == "second_order") return AblationAxis::second_order;
    if (s == "message_passing") return AblationAxis::message_passing;
    if (s == "gumbel") return AblationAxis::gumbel;
    if (s == "local_sim") return AblationAxis::local_sim;
    throw ParamError("unknown ablation axis: " + s);
}

ModelParams init_model(const TrainConfig& cfg) {
    ModelParams p;
    Rng rng(derive_seed(cfg.seed, "init"));
    p.enc = init_encoder(rng, 1, cfg.feat_channels, cfg.embed_dim);
    p.gcn = init_gcn(rng, cfg.embed_dim, cfg.gcn_hidden);
    return p;
}

std::vector<ParamRef> param_refs(ModelParams& params) {
    std::vector<ParamRef> refs;
    for (size_t l = 0; l < params.enc.conv.size(); ++l) {
        ConvLayer& c = params.enc.conv[l];
        std::string base = "enc/conv" + std::to_string(l);
        refs.push_back({base + "/w", &c.w,
                        {uint32_t(c.out_ch), uint32_t(c.in_ch), uint32_t(c.ksize), uint32_t(c.ksize)}});
        refs.push_back({base + "/b", &c.b, {uint32_t(c.out_ch)}});
    }
    refs.push_back({"enc/proj/w", &params.enc.proj_w.v,
                    {uint32_t(params.enc.proj_w.rows), uint32_t(params.enc.proj_w.cols)}});
    refs.push_back({"enc/proj/b", &params.enc.proj_b, {uint32_t(params.enc.proj_b.size())}});
    for (size_t l = 0; l < params.gcn.layers.size(); ++l) {
        Matrix& m = params.gcn.layers[l];
        refs.push_back({"gcn/layer" + std::to_string(l), &m.v,
                        {uint32_t(m.rows), uint32_t(m.cols)}});
    }
    return refs;
}

AdamState init_adam(ModelParams& params) {
    AdamState st;
    for (auto& r : param_refs(params)) {
        st.m.emplace_back(r.data->size(), 0.0);
        st.v.emplace_back(r.data->size(), 0.0);
    }
    return st;
}

void adam_update(ModelParams& params, AdamState& state,
                 const std::vector<std::vector<double>>& grads, double lr) {
    auto refs = param_refs(params);
    if (grads.size() != refs.size() || state.m.size() != refs.size())
        throw ContractError("adam_update: registry size mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (size_t t = 0; t < refs.size(); ++t) {
        auto& x = *refs[t].data;
        if (grads[t].size() != x.size()) throw ContractError("adam_update: grad shape mismatch");
        auto& m = state.m[t];
        auto& v = state.v[t];
        for (size_t i = 0; i < x.size(); ++i) {
            double g = grads[t][i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            double mh = m[i] / bc1, vh = v[i] / bc2;
            x[i] = f32(x[i] - lr * mh / (std::sqrt(vh) + state.eps));
            m[i] = f32(m[i]);
            v[i] = f32(v[i]);
        }
    }
}

BatchForward forward_batch(const ModelParams& params, const std::vector<SourceImage>& batch,
                           const TrainConfig& cfg, AblationAxis axis, Rng& rng,
                           bool with_traces) {
    int n = int(batch.size());
    BatchForward fb;
    fb.pairs = make_view_pairs(batch, rng);

    fb.enc_s.resize(n);
    fb.enc_t.resize(n);
    parallel_for(size_t(n) * 2, [&](size_t k) {
        int i = int(k / 2);
        if (k % 2 == 0)
            fb.enc_s[i] = encoder_forward(params.enc, fb.pairs[i].view_s);
        else
            fb.enc_t[i] = encoder_forward(params.enc, fb.pairs[i].view_t);
    });

    const Tensor3& y0 = fb.enc_s[0].act.back();
    int F = params.enc.embed_dim();
    fb.x_s = Matrix(n, F);
    fb.x_t = Matrix(n, F);
    fb.pos_s.resize(n);
    fb.pos_t.resize(n);
    for (int i = 0; i < n; ++i) {
        std::copy(fb.enc_s[i].z.begin(), fb.enc_s[i].z.end(), fb.x_s.row(i));
        std::copy(fb.enc_t[i].z.begin(), fb.enc_t[i].z.end(), fb.x_t.row(i));
        fb.pos_s[i] = downsample_positions(fb.pairs[i].pos_s, y0.h, y0.w);
        fb.pos_t[i] = downsample_positions(fb.pairs[i].pos_t, y0.h, y0.w);
    }

    fb.graph_s = knn_graph(fb.x_s, cfg.k_neighbors);
    fb.graph_s.side = 's';
    fb.graph_t = knn_graph(fb.x_t, cfg.k_neighbors);
    fb.graph_t.side = 't';

    if (axis == AblationAxis::message_passing) {
        fb.zhat_s = fb.x_s;
        fb.zhat_t = fb.x_t;
    } else {
        fb.zhat_s = gcn_forward(fb.graph_s, params.gcn, with_traces ? &fb.gcn_s : nullptr);
        fb.zhat_t = gcn_forward(fb.graph_t, params.gcn, with_traces ? &fb.gcn_t : nullptr);
    }

    std::vector<Tensor3> ys, yt;
    ys.reserve(n);
    yt.reserve(n);
    for (int i = 0; i < n; ++i) {
        ys.push_back(fb.enc_s[i].act.back());
        yt.push_back(fb.enc_t[i].act.back());
    }
    double alpha = (axis == AblationAxis::local_sim) ? 1.0 : cfg.alpha;
    fb.sys = build_system(fb.zhat_s, fb.zhat_t, fb.graph_s, fb.graph_t, ys, yt, fb.pos_s,
                          fb.pos_t, alpha, cfg.gamma, with_traces ? &fb.aff : nullptr);
    return fb;
}

namespace {

struct StepGrads {
    std::vector<std::vector<double>> grads;  // registry order
    StepMetrics metrics;
};

StepGrads compute_step_grads(ModelParams& params, const std::vector<SourceImage>& batch,
                             const TrainConfig& cfg, AblationAxis axis, Rng& rng,
                             int64_t step_index, const std::string& dump_dir) {
    int n = int(batch.size());
    if (n != cfg.batch_size) throw ContractError("train_step: batch size != config batch_size");

    BatchForward fb = forward_batch(params, batch, cfg, axis, rng, true);

    if (!all_finite(fb.sys.c_v.v) || !all_finite(fb.sys.c_e.v)) {
        if (!dump_dir.empty()) {
            std::filesystem::create_directories(dump_dir);
            write_instance(fb.sys, dump_dir + "/affinity_dump_step" +
                                        std::to_string(step_index) + ".txt");
        }
        throw NumericError("train_step: non-finite affinities at step " +
                           std::to_string(step_index));
    }

    std::vector<int> gold(n);
    for (int i = 0; i < n; ++i) gold[i] = i;
    Matrix gv = hamming_loss_grad(gold);

    SolveMode mode = (axis == AblationAxis::second_order) ? SolveMode::lap_only : cfg.solver_mode;
    double noise = (axis == AblationAxis::gumbel) ? 0.0 : cfg.noise_scale;
    double offset = (axis == AblationAxis::gumbel) ? kGumbelMean : 0.0;

    StepMetrics met;
    met.step = step_index;
    int samples = std::max(1, cfg.imle_samples);
    Matrix dc_v(n, n);
    Matrix dc_e(fb.sys.c_e.rows, fb.sys.c_e.cols);
    for (int m = 0; m < samples; ++m) {
        auto [vtilde, state] = imle_forward(fb.sys, mode, cfg.lambda, noise, rng, offset,
                                            cfg.exact_cap, cfg.heuristic_iters);
        ImleGrads ig = imle_backward(state, gv);
        for (size_t i = 0; i < dc_v.v.size(); ++i) dc_v.v[i] += ig.dc_v.v[i] / samples;
        if (!ig.dc_e.v.empty())
            for (size_t i = 0; i < dc_e.v.size(); ++i) dc_e.v[i] += ig.dc_e.v[i] / samples;
        if (m == 0) {
            met.loss = hamming_loss(vtilde, gold);
            int hits = 0;
            for (int i = 0; i < n; ++i) hits += vtilde.assignment[i] == i;
            met.match_acc = double(hits) / n;
            met.objective = vtilde.objective;
        }
    }
    if (!std::isfinite(met.loss)) throw NumericError("train_step: non-finite loss");

    // second-order disabled: no edge gradients flow
    Matrix dc_e_used = (mode == SolveMode::lap_only) ? Matrix() : dc_e;

    std::vector<Tensor3> ys, yt;
    for (int i = 0; i < n; ++i) {
        ys.push_back(fb.enc_s[i].act.back());
        yt.push_back(fb.enc_t[i].act.back());
    }
    double alpha = (axis == AblationAxis::local_sim) ? 1.0 : cfg.alpha;
    AffinityGrads ag = affinity_backward(fb.sys, fb.aff, fb.zhat_s, fb.zhat_t, ys, yt, dc_v,
                                         dc_e_used, alpha);

    GcnGrads gg_s, gg_t;
    Matrix d_x_s, d_x_t;
    bool use_gcn = axis != AblationAxis::message_passing;
    if (use_gcn) {
        gg_s = gcn_backward(fb.graph_s, params.gcn, fb.gcn_s, ag.d_zhat_s);
        gg_t = gcn_backward(fb.graph_t, params.gcn, fb.gcn_t, ag.d_zhat_t);
        d_x_s = std::move(gg_s.x);
        d_x_t = std::move(gg_t.x);
    } else {
        d_x_s = ag.d_zhat_s;
        d_x_t = ag.d_zhat_t;
    }

    // encoder gradients for all 2N views, reduced in a fixed order
    std::vector<EncoderGrads> per_view(size_t(n) * 2);
    parallel_for(size_t(n) * 2, [&](size_t k) {
        int i = int(k / 2);
        if (k % 2 == 0)
            per_view[k] = encoder_backward(params.enc, fb.enc_s[i], ag.d_ys[i],
                                           {d_x_s.row(i), size_t(d_x_s.cols)});
        else
            per_view[k] = encoder_backward(params.enc, fb.enc_t[i], ag.d_yt[i],
                                           {d_x_t.row(i), size_t(d_x_t.cols)});
    });
    EncoderGrads enc_g = zero_encoder_grads(params.enc, cfg.canvas);
    for (auto& pv : per_view) enc_g.add(pv);

    // flatten into registry order
    std::vector<std::vector<double>> grads;
    for (size_t l = 0; l < params.enc.conv.size(); ++l) {
        grads.push_back(enc_g.conv_w[l]);
        grads.push_back(enc_g.conv_b[l]);
    }
    grads.push_back(enc_g.proj_w.v);
    grads.push_back(enc_g.proj_b);
    for (size_t l = 0; l < params.gcn.layers.size(); ++l) {
        if (use_gcn)
            grads.push_back(l == 0 ? gg_s.layers[0].v : gg_s.layers[1].v);
        else
            grads.push_back(std::vector<double>(params.gcn.layers[l].v.size(), 0.0));
    }
    if (use_gcn) {
        // both sides share the GCN; sum their parameter gradients
        size_t base = grads.size() - params.gcn.layers.size();
        for (size_t l = 0; l < params.gcn.layers.size(); ++l)
            for (size_t i = 0; i < grads[base + l].size(); ++i)
                grads[base + l][i] += gg_t.layers[l].v[i];
    }

    double gn = 0.0;
    for (auto& g : grads)
        for (double x : g) gn += x * x;
    met.grad_norm = std::sqrt(gn);

    return {std::move(grads), met};
}

}  // namespace

StepMetrics train_step(ModelParams& params, AdamState& adam,
                       const std::vector<SourceImage>& batch, const TrainConfig& cfg,
                       AblationAxis axis, double lr, int64_t step_index, Rng& rng,
                       const std::string& dump_dir) {
    StepGrads sg = compute_step_grads(params, batch, cfg, axis, rng, step_index, dump_dir);
    sg.metrics.lr = lr;
    adam_update(params, adam, sg.grads, lr);
    return sg.metrics;
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    // four halvings land at {0.4, 0.6, 0.8, 0.9} of the run; other counts are
    // spaced evenly
    std::vector<double> fractions;
    if (cfg.lr_halvings == 4) {
        fractions = {0.4, 0.6, 0.8, 0.9};
    } else {
        for (int k = 1; k <= cfg.lr_halvings; ++k)
            fractions.push_back(double(k) / (cfg.lr_halvings + 1));
    }
    double lr = cfg.lr;
    for (double f : fractions)
        if (epoch >= int(std::floor(f * cfg.epochs))) lr *= 0.5;
    return lr;
}

namespace {

void emit_metrics(const StepMetrics& m, std::ostream* file, bool echo) {
    char line[256];
    std::snprintf(line, sizeof line, "%lld\t%.9g\t%.9g\t%.9g\t%.9g",
                  (long long)m.step, m.loss, m.match_acc, m.objective, m.lr);
    if (file) (*file) << line << "\n";
    if (echo) std::printf("%s\n", line);
}

}  // namespace

TrainResult pretrain(const TrainConfig& cfg, AblationAxis axis, std::ostream* metrics_out,
                     bool echo_stdout, const std::string& out_dir) {
    if (cfg.batch_size <= cfg.k_neighbors)
        throw ParamError("pretrain: batch_size must exceed k_neighbors");
    set_thread_cap(cfg.threads);

    TrainResult res;
    res.corpus = generate_corpus(cfg.seed, cfg.corpus_count, cfg.dup_fraction, cfg.canvas);
    int holdout = int(std::llround(cfg.eval_fraction * cfg.corpus_count));
    res.holdout_begin = cfg.corpus_count - holdout;
    if (res.holdout_begin < cfg.batch_size)
        throw ParamError("pretrain: training slice smaller than one batch");

    res.params = init_model(cfg);
    res.adam = init_adam(res.params);

    int steps_per_epoch = res.holdout_begin / cfg.batch_size;
    int64_t global_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = lr_at_epoch(cfg, epoch);
        for (int s = 0; s < steps_per_epoch; ++s, ++global_step) {
            Rng batch_rng(derive_seed(cfg.seed, "batch", uint64_t(global_step)));
            int shards = std::max(1, cfg.graphs_per_step);
            StepMetrics met;
            std::vector<std::vector<double>> acc;
            for (int gshard = 0; gshard < shards; ++gshard) {
                std::vector<SourceImage> batch;
                batch.reserve(cfg.batch_size);
                for (int i : sample_distinct(batch_rng, res.holdout_begin, cfg.batch_size))
                    batch.push_back(res.corpus.images[i]);
                Rng step_rng(derive_seed(cfg.seed, "step",
                                         uint64_t(global_step) * uint64_t(shards) + gshard));
                StepGrads sg = compute_step_grads(res.params, batch, cfg, axis, step_rng,
                                                  global_step, out_dir);
                if (gshard == 0) {
                    met = sg.metrics;
                    acc = std::move(sg.grads);
                } else {
                    met.loss += sg.metrics.loss;
                    met.match_acc += sg.metrics.match_acc;
                    met.objective += sg.metrics.objective;
                    for (size_t t = 0; t < acc.size(); ++t)
                        for (size_t i = 0; i < acc[t].size(); ++i)
                            acc[t][i] += sg.grads[t][i];
                }
            }
            if (shards > 1) {
                met.loss /= shards;
                met.match_acc /= shards;
                met.objective /= shards;
                for (auto& g : acc)
                    for (auto& x : g) x /= shards;
            }
            met.lr = lr;
            adam_update(res.params, res.adam, acc, lr);
            res.history.push_back(met);
            emit_metrics(met, metrics_out, echo_stdout);
            if (!out_dir.empty() && cfg.checkpoint_every > 0 &&
                (global_step + 1) % cfg.checkpoint_every == 0)
                write_model_checkpoint(out_dir + "/checkpoint_" + std::to_string(global_step + 1) +
                                           ".gmssl",
                                       res.params, res.adam, global_step + 1);
        }
    }
    if (!out_dir.empty())
        write_model_checkpoint(out_dir + "/checkpoint.gmssl", res.params, res.adam, global_step);
    return res;
}

void write_model_checkpoint(const std::string& path, ModelParams& params, AdamState& adam,
                            int64_t global_step) {
    std::vector<TensorRecord> recs;
    auto refs = param_refs(params);
    for (auto& r : refs) recs.push_back({r.name, r.dims, *r.data});
    for (size_t t = 0; t < refs.size(); ++t) {
        recs.push_back({"adam/m/" + refs[t].name, {uint32_t(adam.m[t].size())}, adam.m[t]});
        recs.push_back({"adam/v/" + refs[t].name, {uint32_t(adam.v[t].size())}, adam.v[t]});
    }
    recs.push_back({"adam/step", {1}, {double(adam.step)}});
    recs.push_back({"train/step", {1}, {double(global_step)}});
    save_checkpoint(path, recs);
}

int64_t restore_from_checkpoint(const std::string& path, ModelParams& params, AdamState& adam) {
    auto recs = load_checkpoint(path);
    std::map<std::string, const TensorRecord*> by_name;
    for (auto& r : recs) by_name[r.name] = &r;
    auto fetch = [&](const std::string& name) -> const TensorRecord& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ParamError("checkpoint missing tensor " + name);
        return *it->second;
    };
    auto refs = param_refs(params);
    for (size_t t = 0; t < refs.size(); ++t) {
        const auto& r = fetch(refs[t].name);
        if (r.data.size() != refs[t].data->size())
            throw ContractError("checkpoint tensor size mismatch for " + refs[t].name);
        *refs[t].data = r.data;
        adam.m[t] = fetch("adam/m/" + refs[t].name).data;
        adam.v[t] = fetch("adam/v/" + refs[t].name).data;
    }
    adam.step = int64_t(fetch("adam/step").data.at(0));
    return int64_t(fetch("train/step").data.at(0));
}

ModelParams load_model(const std::string& path) {
    auto recs = load_checkpoint(path);
    std::map<std::string, const TensorRecord*> by_name;
    for (auto& r : recs) by_name[r.name] = &r;
    auto fetch = [&](const std::string& name) -> const TensorRecord& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ParamError("checkpoint missing tensor " + name);
        return *it->second;
    };

    ModelParams p;
    for (int l = 0;; ++l) {
        std::string base = "enc/conv" + std::to_string(l);
        if (!by_name.count(base + "/w")) break;
        const auto& w = fetch(base + "/w");
        const auto& b = fetch(base + "/b");
        if (w.dims.size() != 4) throw ParamError("bad conv dims in checkpoint");
        ConvLayer c;
        c.out_ch = int(w.dims[0]);
        c.in_ch = int(w.dims[1]);
        c.ksize = int(w.dims[2]);
        c.w = w.data;
        c.b = b.data;
        p.enc.conv.push_back(std::move(c));
    }
    if (p.enc.conv.empty()) throw ParamError("checkpoint has no encoder layers");
    const auto& pw = fetch("enc/proj/w");
    if (pw.dims.size() != 2) throw ParamError("bad projector dims in checkpoint");
    p.enc.proj_w = Matrix(int(pw.dims[0]), int(pw.dims[1]));
    p.enc.proj_w.v = pw.data;
    p.enc.proj_b = fetch("enc/proj/b").data;
    for (int l = 0;; ++l) {
        std::string name = "gcn/layer" + std::to_string(l);
        if (!by_name.count(name)) break;
        const auto& r = fetch(name);
        Matrix m(int(r.dims[0]), int(r.dims[1]));
        m.v = r.data;
        p.gcn.layers.push_back(std::move(m));
    }
    return p;
}

AblationRow run_ablation(const TrainConfig& cfg, AblationAxis axis, int eval_trials) {
    TrainResult tr = pretrain(cfg, axis);
    MatchEvalResult ev = eval_matching(tr.params, tr.corpus, tr.holdout_begin, cfg, axis,
                                       eval_trials, derive_seed(cfg.seed, "eval"));
    AblationRow row;
    row.axis = axis;
    row.match_acc = ev.match_acc;
    row.dup_disambig = ev.dup_disambig;
    return row;
}

}  // namespace gmssl
