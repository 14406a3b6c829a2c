#pragma once

#include <map>
#include <string>

#include "gmssl/matcher.hpp"

namespace gmssl {

// Everything a pretraining run needs; defaults are the desk-scale settings.
struct TrainConfig {
    int batch_size = 16;          // graph size N
    int k_neighbors = 5;
    double alpha = 0.8;
    double lambda = 80.0;
    double gamma = 0.5;
    double lr = 2e-3;
    int lr_halvings = 4;
    int epochs = 30;
    uint64_t seed = 7;
    double noise_scale = 1.0;
    SolveMode solver_mode = SolveMode::heuristic;
    int imle_samples = 1;
    int graphs_per_step = 1;

    int corpus_count = 2000;
    double dup_fraction = 0.0;
    int canvas = 64;
    double eval_fraction = 0.2;   // held-out slice of the corpus

    int feat_channels = 32;       // D
    int embed_dim = 32;           // F
    int gcn_hidden = 32;

    int exact_cap = 10;
    int heuristic_iters = 1000;
    int checkpoint_every = 0;     // steps; 0 = only at the end
    int threads = 0;              // 0 = hardware default
};

// Flat `key = value` file with '#' comments. Unknown keys are rejected.
TrainConfig parse_config_text(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});
void set_config_key(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_text(const TrainConfig& cfg);

}  // namespace gmssl
