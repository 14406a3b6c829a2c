#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gmssl/affinity.hpp"
#include "gmssl/config.hpp"
#include "gmssl/encoder.hpp"
#include "gmssl/graphnet.hpp"
#include "gmssl/imle.hpp"
#include "gmssl/synth_data.hpp"

namespace gmssl {

// Table-5 style component switches.
enum class AblationAxis { full, second_order, message_passing, gumbel, local_sim };

std::string to_string(AblationAxis axis);
AblationAxis ablation_from_string(const std::string& s);

// Constant added to both cost blocks when Gumbel noise is disabled.
constexpr double kGumbelMean = 0.57721566490153286;

struct ModelParams {
    EncoderParams enc;
    GcnParams gcn;
};

ModelParams init_model(const TrainConfig& cfg);

// Flat registry of the trainable tensors, in a fixed order shared by the
// optimizer and the checkpoint format.
struct ParamRef {
    std::string name;
    std::vector<double>* data;
    std::vector<uint32_t> dims;
};
std::vector<ParamRef> param_refs(ModelParams& params);

struct AdamState {
    std::vector<std::vector<double>> m, v;  // aligned with param_refs order
    int64_t step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

AdamState init_adam(ModelParams& params);

// Bias-corrected Adam over the registry; updated values (and moments) are
// rounded to f32 so checkpoints restore them exactly.
void adam_update(ModelParams& params, AdamState& state,
                 const std::vector<std::vector<double>>& grads, double lr);

// One full forward pass of a batch through views, encoder, graphs, message
// passing and affinities.
struct BatchForward {
    std::vector<ViewPair> pairs;
    std::vector<ForwardTrace> enc_s, enc_t;
    std::vector<PosMap> pos_s, pos_t;  // feature-resolution provenance
    Matrix x_s, x_t;                   // N x F pre-GCN embeddings
    BatchGraph graph_s, graph_t;
    GcnTrace gcn_s, gcn_t;
    Matrix zhat_s, zhat_t;
    AffinitySystem sys;
    AffinityTrace aff;
};

BatchForward forward_batch(const ModelParams& params, const std::vector<SourceImage>& batch,
                           const TrainConfig& cfg, AblationAxis axis, Rng& rng,
                           bool with_traces);

struct StepMetrics {
    int64_t step = 0;
    double loss = 0.0;
    double match_acc = 0.0;
    double objective = 0.0;
    double lr = 0.0;
    double grad_norm = 0.0;
};

// Full pipeline plus one optimizer update. Throws NumericError (after dumping
// the affinity system to dump_dir when given) if the loss goes non-finite.
StepMetrics train_step(ModelParams& params, AdamState& adam,
                       const std::vector<SourceImage>& batch, const TrainConfig& cfg,
                       AblationAxis axis, double lr, int64_t step_index, Rng& rng,
                       const std::string& dump_dir = "");

double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct TrainResult {
    ModelParams params;
    AdamState adam;
    Corpus corpus;
    int holdout_begin = 0;  // corpus index where the held-out slice starts
    std::vector<StepMetrics> history;
};

// Runs the SSL loop on a fresh synthetic corpus. Metrics lines go to
// `metrics_out` (when given) and stdout (when echo is set); checkpoints land
// in out_dir unless it is empty.
TrainResult pretrain(const TrainConfig& cfg, AblationAxis axis = AblationAxis::full,
                     std::ostream* metrics_out = nullptr, bool echo_stdout = false,
                     const std::string& out_dir = "");

// Resumes from checkpoint tensors: restores params, Adam moments and the
// global step counter.
int64_t restore_from_checkpoint(const std::string& path, ModelParams& params, AdamState& adam);
void write_model_checkpoint(const std::string& path, ModelParams& params, AdamState& adam,
                            int64_t global_step);
ModelParams load_model(const std::string& path);

struct AblationRow {
    AblationAxis axis;
    double match_acc = 0.0;
    std::optional<double> dup_disambig;
};

// Trains with one component disabled and reports held-out metrics.
AblationRow run_ablation(const TrainConfig& cfg, AblationAxis axis, int eval_trials = 50);

}  // namespace gmssl
