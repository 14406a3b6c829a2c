#include "gmssl/rng.hpp"

#include <cmath>

namespace gmssl {

double Rng::normal() {
    // Box-Muller; u clipped away from 0 so log stays finite
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
}

uint64_t hash_name(std::string_view name) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<int> sample_distinct(Rng& rng, int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
        int j = i + int(rng.uniform_int(uint64_t(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

uint64_t derive_seed(uint64_t root, std::string_view stream, uint64_t index) {
    uint64_t h = hash_name(stream);
    // one splitmix scramble of the combined words
    uint64_t z = root ^ (h + 0x9e3779b97f4a7c15ULL + (index << 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z ? z : 1;
}

}  // namespace gmssl
