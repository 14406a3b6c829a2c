#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gmssl {

// Deterministic 64-bit generator (xoshiro-style splitmix core). The standard
// <random> distributions are implementation-defined, so all transforms that
// must be reproducible bit-for-bit are hand-rolled here.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        // multiply-shift; bias is negligible for n << 2^64
        unsigned __int128 m = (unsigned __int128)next_u64() * n;
        return (uint64_t)(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via Box-Muller (one value per call, cached pair dropped
    // to keep the stream position independent of call parity)
    double normal();

    uint64_t state() const { return state_; }

private:
    uint64_t state_;
};

// Stable 64-bit name hash (FNV-1a) for deriving named sub-streams.
uint64_t hash_name(std::string_view name);

// k distinct integers from [0, n), in draw order (partial Fisher-Yates).
std::vector<int> sample_distinct(Rng& rng, int n, int k);

// Derives an independent seed for a named sub-stream, e.g.
// derive_seed(seed, "corpus"), derive_seed(seed, "step", 17).
uint64_t derive_seed(uint64_t root, std::string_view stream, uint64_t index = 0);

}  // namespace gmssl
