#include "gmssl/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gmssl/errors.hpp"

namespace gmssl {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& v, const std::string& key) {
    try {
        return std::stoi(v);
    } catch (...) {
        throw ParamError("config: bad integer for " + key + ": " + v);
    }
}

double to_double(const std::string& v, const std::string& key) {
    try {
        return std::stod(v);
    } catch (...) {
        throw ParamError("config: bad number for " + key + ": " + v);
    }
}

}  // namespace

void set_config_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "batch_size") cfg.batch_size = to_int(value, key);
    else if (key == "k_neighbors") cfg.k_neighbors = to_int(value, key);
    else if (key == "alpha") cfg.alpha = to_double(value, key);
    else if (key == "lambda") cfg.lambda = to_double(value, key);
    else if (key == "gamma") cfg.gamma = to_double(value, key);
    else if (key == "lr") cfg.lr = to_double(value, key);
    else if (key == "lr_halvings") cfg.lr_halvings = to_int(value, key);
    else if (key == "epochs") cfg.epochs = to_int(value, key);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "noise_scale") cfg.noise_scale = to_double(value, key);
    else if (key == "solver_mode") cfg.solver_mode = solve_mode_from_string(value);
    else if (key == "imle_samples") cfg.imle_samples = to_int(value, key);
    else if (key == "graphs_per_step") cfg.graphs_per_step = to_int(value, key);
    else if (key == "corpus_count") cfg.corpus_count = to_int(value, key);
    else if (key == "dup_fraction") cfg.dup_fraction = to_double(value, key);
    else if (key == "canvas") cfg.canvas = to_int(value, key);
    else if (key == "eval_fraction") cfg.eval_fraction = to_double(value, key);
    else if (key == "feat_channels") cfg.feat_channels = to_int(value, key);
    else if (key == "embed_dim") cfg.embed_dim = to_int(value, key);
    else if (key == "gcn_hidden") cfg.gcn_hidden = to_int(value, key);
    else if (key == "exact_cap") cfg.exact_cap = to_int(value, key);
    else if (key == "heuristic_iters") cfg.heuristic_iters = to_int(value, key);
    else if (key == "checkpoint_every") cfg.checkpoint_every = to_int(value, key);
    else if (key == "threads") cfg.threads = to_int(value, key);
    else throw ParamError("config: unknown key " + key);
}

TrainConfig parse_config_text(const std::string& text, TrainConfig base) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParamError("config: expected key = value, got: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ParamError("config: empty key or value: " + line);
        set_config_key(base, key, value);
    }
    return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
    std::ifstream f(path);
    if (!f) throw ParamError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), base);
}

std::string config_to_text(const TrainConfig& cfg) {
    std::ostringstream out;
    char buf[64];
    auto put_d = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << key << " = " << buf << "\n";
    };
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "k_neighbors = " << cfg.k_neighbors << "\n";
    put_d("alpha", cfg.alpha);
    put_d("lambda", cfg.lambda);
    put_d("gamma", cfg.gamma);
    put_d("lr", cfg.lr);
    out << "lr_halvings = " << cfg.lr_halvings << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "seed = " << cfg.seed << "\n";
    put_d("noise_scale", cfg.noise_scale);
    out << "solver_mode = " << to_string(cfg.solver_mode) << "\n";
    out << "imle_samples = " << cfg.imle_samples << "\n";
    out << "graphs_per_step = " << cfg.graphs_per_step << "\n";
    out << "corpus_count = " << cfg.corpus_count << "\n";
    put_d("dup_fraction", cfg.dup_fraction);
    out << "canvas = " << cfg.canvas << "\n";
    put_d("eval_fraction", cfg.eval_fraction);
    out << "feat_channels = " << cfg.feat_channels << "\n";
    out << "embed_dim = " << cfg.embed_dim << "\n";
    out << "gcn_hidden = " << cfg.gcn_hidden << "\n";
    out << "exact_cap = " << cfg.exact_cap << "\n";
    out << "heuristic_iters = " << cfg.heuristic_iters << "\n";
    out << "checkpoint_every = " << cfg.checkpoint_every << "\n";
    out << "threads = " << cfg.threads << "\n";
    return out.str();
}

}  // namespace gmssl
