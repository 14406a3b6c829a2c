// Drives the gm-ssl binary end to end: exit codes, file outputs, determinism.
// argv[1] is the path to the binary (passed by ctest).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("%s - %s\n", ok ? "ok" : "FAIL", what.c_str());
    if (!ok) ++failures;
}

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run(const std::string& cmd, const fs::path& scratch) {
    fs::path out_file = scratch / "cmd_out.txt";
    std::string full = cmd + " > " + out_file.string() + " 2>&1";
    int status = std::system(full.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(out_file);
    std::stringstream ss;
    ss << f.rdbuf();
    r.out = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_integration <gm-ssl binary>\n");
        return 2;
    }
    std::string bin = argv[1];
    fs::path scratch = fs::temp_directory_path() / "gmssl_cli_test";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    {  // gen-corpus: determinism and manifest shape
        auto a = run(bin + " gen-corpus --seed 7 --count 24 --dup-fraction 0.25 --out " +
                         (scratch / "corpA").string(),
                     scratch);
        auto b = run(bin + " gen-corpus --seed 7 --count 24 --dup-fraction 0.25 --out " +
                         (scratch / "corpB").string(),
                     scratch);
        check(a.exit_code == 0 && b.exit_code == 0, "gen-corpus exits 0");
        bool same = true;
        int n_files = 0;
        for (auto& e : fs::directory_iterator(scratch / "corpA")) {
            ++n_files;
            same = same && slurp(e.path()) == slurp(scratch / "corpB" / e.path().filename());
        }
        check(same && n_files == 25, "gen-corpus is byte-identical across runs (24 pgm + manifest)");
        std::ifstream mf(scratch / "corpA" / "manifest.txt");
        int idx, cls, dup, lines = 0, tagged = 0;
        while (mf >> idx >> cls >> dup) {
            ++lines;
            tagged += dup >= 0;
        }
        check(lines == 24 && tagged == 6, "manifest has index/class/dup lines, ~25% dup-tagged");
        auto bad = run(bin + " gen-corpus --count 5 --dup-fraction 1.5 --out " +
                           (scratch / "corpC").string(),
                       scratch);
        check(bad.exit_code == 1, "invalid dup-fraction exits 1");
    }

    {  // solve: lap mode on a crafted instance; exact over cap exits 2
        fs::path inst = scratch / "inst3.txt";
        {
            std::ofstream f(inst);
            f << "3 1 1\n";
            f << "1 0 0\n0 1 0\n0 0 1\n";
            f << "0 1 0 1 0.5\n";
        }
        auto r = run(bin + " solve --mode lap --instance " + inst.string(), scratch);
        check(r.exit_code == 0 && r.out.find("assignment: 0 1 2") != std::string::npos,
              "solve --mode lap prints the identity assignment");
        auto rex = run(bin + " solve --mode exact --instance " + inst.string(), scratch);
        check(rex.exit_code == 0 && rex.out.find("objective") != std::string::npos,
              "solve --mode exact handles a 3-node instance");

        fs::path big = scratch / "inst50.txt";
        {
            std::ofstream f(big);
            f << "50 0 0\n";
            for (int i = 0; i < 50; ++i) {
                for (int j = 0; j < 50; ++j) f << (i == j ? 1 : 0) << (j == 49 ? '\n' : ' ');
            }
        }
        auto rbig = run(bin + " solve --mode exact --instance " + big.string(), scratch);
        check(rbig.exit_code == 2, "exact solver over the node cap exits 2");
        auto rlap = run(bin + " solve --mode lap --instance " + big.string(), scratch);
        check(rlap.exit_code == 0, "lap solver handles N=50");
        auto rmiss = run(bin + " solve --mode lap --instance " + (scratch / "nope.txt").string(),
                         scratch);
        check(rmiss.exit_code == 1, "missing instance file exits 1");
    }

    {  // unknown flag
        auto r = run(bin + " solve --bogus-flag 1", scratch);
        check(r.exit_code == 1, "unknown flag exits 1 with usage");
    }

    {  // pretrain: byte-identical metrics across identical seeds
        std::string common =
            " pretrain --seed 7 --epochs 1 --corpus-count 48 --batch-size 8 --threads 2 --out ";
        auto a = run(bin + common + (scratch / "runA").string(), scratch);
        auto b = run(bin + common + (scratch / "runB").string(), scratch);
        check(a.exit_code == 0 && b.exit_code == 0, "pretrain exits 0");
        std::string ma = slurp(scratch / "runA" / "metrics.tsv");
        std::string mb = slurp(scratch / "runB" / "metrics.tsv");
        check(!ma.empty() && ma == mb, "metrics.tsv is byte-identical for identical seeds");
        check(fs::exists(scratch / "runA" / "checkpoint.gmssl"), "pretrain writes a checkpoint");
        check(fs::exists(scratch / "runA" / "manifest.txt"), "pretrain writes a run manifest");

        // the manifest body doubles as a loadable config
        std::string manifest = slurp(scratch / "runA" / "manifest.txt");
        check(manifest.find("binary_hash") != std::string::npos &&
                  manifest.find("seed = 7") != std::string::npos,
              "manifest records the binary hash and resolved config");

        auto c = run(bin + " pretrain --config " + (scratch / "runA" / "manifest.txt").string() +
                         " --out " + (scratch / "runC").string(),
                     scratch);
        check(c.exit_code == 0, "re-running from the manifest works");
        check(slurp(scratch / "runC" / "metrics.tsv") == ma,
              "manifest replay reproduces metrics.tsv");
    }

    {  // GMSSL_SEED env override
        auto a = run("GMSSL_SEED=11 " + bin +
                         " pretrain --epochs 1 --corpus-count 48 --batch-size 8 --out " +
                         (scratch / "runE").string(),
                     scratch);
        check(a.exit_code == 0, "pretrain honors GMSSL_SEED");
        std::string manifest = slurp(scratch / "runE" / "manifest.txt");
        check(manifest.find("seed = 11") != std::string::npos, "env seed lands in the manifest");
    }

    {  // export-embeddings + eval-matching on the pretrained checkpoint
        std::string ckpt = (scratch / "runA" / "checkpoint.gmssl").string();
        fs::path emb = scratch / "emb.txt";
        auto r = run(bin + " export-embeddings --checkpoint " + ckpt +
                         " --corpus-count 48 --seed 7 --out " + emb.string(),
                     scratch);
        check(r.exit_code == 0, "export-embeddings exits 0");
        std::ifstream f(emb);
        int n, d;
        f >> n >> d;
        check(n == 48 && d == 32, "embedding header is `N F`");
        int rows = 0;
        double worst = 1.0;
        for (int i = 0; i < n; ++i) {
            double norm = 0.0, x;
            for (int j = 0; j < d; ++j) {
                if (!(f >> x)) break;
                norm += x * x;
            }
            worst = std::min(worst, norm);
            ++rows;
        }
        check(rows == 48 && std::abs(worst - 1.0) < 1e-5, "embedding rows are unit norm");

        auto ev = run(bin + " eval-matching --checkpoint " + ckpt +
                          " --corpus-count 48 --batch-size 8 --seed 7 --trials 4",
                      scratch);
        check(ev.exit_code == 0 && ev.out.find("match_acc=") != std::string::npos &&
                  ev.out.find("solver_gap=") != std::string::npos &&
                  ev.out.find("probe_acc=") != std::string::npos,
              "eval-matching prints EvalReport key=value lines");
    }

    {  // grad-check
        auto r = run(bin + " grad-check --n 3 --samples 50 --oracle-samples 2000 --lambda 80",
                     scratch);
        check(r.exit_code == 0 && r.out.find("cosine_similarity:") != std::string::npos,
              "grad-check prints estimate, oracle and cosine");
    }

    std::printf("%s\n", failures == 0 ? "all cli checks passed" : "CLI CHECKS FAILED");
    return failures == 0 ? 0 : 1;
}
