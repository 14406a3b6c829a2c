#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmssl/array.hpp"
#include "gmssl/rng.hpp"

namespace gmssl {

constexpr int kDefaultCanvas = 64;
constexpr int kNumShapeFamilies = 5;  // disk, ring, bar, cross, blob
constexpr int kNoDupGroup = -1;

struct SourceImage {
    Image pixels;            // canvas x canvas grays in [0,1]
    int class_tag = 0;       // shape family
    int dup_group = kNoDupGroup;
};

struct Corpus {
    std::vector<SourceImage> images;
    uint64_t seed = 0;
    double dup_fraction = 0.0;
    int canvas = kDefaultCanvas;
};

// Procedurally renders `count` shape images. A dup_fraction share of them is
// organized into near-duplicate pairs: the second member of each pair is the
// base shape re-rendered with 0.5 px of sub-pixel jitter, so the pair is
// visually identical (mean abs pixel diff < 0.05) but not pixel-equal.
// Pure in (seed, count, dup_fraction, canvas): same arguments, same bytes.
Corpus generate_corpus(uint64_t seed, int count, double dup_fraction,
                       int canvas = kDefaultCanvas);

// Draws batch_size distinct indices without replacement. The returned order
// is the canonical vertex order used by every downstream stage.
std::vector<int> sample_batch_indices(const Corpus& corpus, Rng& rng, int batch_size);

std::vector<SourceImage> sample_batch(const Corpus& corpus, Rng& rng, int batch_size);

// Binary P5 output plus `index class_tag dup_group` manifest lines
// (dup_group -1 when the image is not in any duplicate group).
void write_corpus(const Corpus& corpus, const std::string& dir);

void write_pgm(const Image& img, const std::string& path);

}  // namespace gmssl
