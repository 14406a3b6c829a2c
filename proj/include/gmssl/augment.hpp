#pragma once

#include <string>
#include <vector>

#include "gmssl/array.hpp"
#include "gmssl/rng.hpp"
#include "gmssl/synth_data.hpp"

namespace gmssl {

// Fully parameterized, replayable augmentation. Geometric part is a crop
// window rescaled to the canvas plus an optional horizontal flip; intensity
// part is brightness/contrast jitter, Gaussian blur and a fixed affine
// normalization. Ops at neutral values are skipped entirely so an identity
// spec reproduces the input bit-for-bit.
struct TransformSpec {
    double crop_r0 = 0.0, crop_c0 = 0.0;  // window origin in source pixels
    double crop_side = 0.0;               // window side length; 0 = full canvas
    bool hflip = false;
    double brightness = 0.0;              // additive, applied about mid-gray
    double contrast = 1.0;                // multiplicative about mid-gray
    double blur_sigma = 0.0;              // 0 = no blur
    bool normalize = false;               // v -> (v - 0.5) * 2

    std::string to_line() const;          // "crop:r0,c0,side flip:1 ..."
    static TransformSpec from_line(const std::string& line);
};

TransformSpec identity_spec(int canvas);

// Crop 50-100% of the area, flip with p=0.5, jitter, blur with p=0.5,
// then normalize. Crop windows always stay inside the canvas.
TransformSpec sample_transform(Rng& rng, int canvas);

// Per-pixel provenance: source-frame coordinates of each view pixel.
// Pixels with no source (outside the canvas) carry valid = 0.
struct PosMap {
    int h = 0, w = 0;
    std::vector<double> row, col;
    std::vector<uint8_t> valid;

    PosMap() = default;
    PosMap(int h_, int w_) : h(h_), w(w_), row(size_t(h_) * w_), col(size_t(h_) * w_),
                             valid(size_t(h_) * w_, 0) {}
    size_t idx(int r, int c) const { return size_t(r) * w + c; }
};

struct View {
    Image pixels;
    PosMap pos;
};

// Applies a spec; pos[r,c] is the exact source coordinate the view pixel was
// sampled from (geometric ops only; intensity ops leave pos unchanged).
View apply(const Image& image, const TransformSpec& spec);

// Provenance composition: `cur` maps into the frame that `prev` maps out of.
// prev's affine coordinates are interpolated at cur's real-valued positions,
// which is exact for the crop/rescale/flip family.
PosMap chain_positions(const PosMap& prev, const PosMap& cur);

struct ViewPair {
    Image view_s, view_t;
    PosMap pos_s, pos_t;
    int source_index = 0;
};

std::vector<ViewPair> make_view_pairs(const std::vector<SourceImage>& batch, Rng& rng);

// Averages source positions inside each receptive cell to bring a pixel-level
// map down to feature-map resolution; cells with no valid pixel are sentinel.
PosMap downsample_positions(const PosMap& pos, int out_h, int out_w);

}  // namespace gmssl
