#pragma once

#include <span>
#include <string>
#include <vector>

#include "gmssl/array.hpp"
#include "gmssl/rng.hpp"

namespace gmssl {

// Strided 3x3 convolution layer; weights laid out [out][in][kr][kc].
struct ConvLayer {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 2, pad = 1;
    std::vector<double> w;
    std::vector<double> b;

    size_t widx(int o, int i, int kr, int kc) const {
        return ((size_t(o) * in_ch + i) * ksize + kr) * ksize + kc;
    }
};

// f_theta (conv stack) + h_phi (linear projector). 64x64 inputs map to a
// 32x8x8 feature grid; embeddings are L2-normalized 32-vectors.
struct EncoderParams {
    std::vector<ConvLayer> conv;
    Matrix proj_w;                // F x D
    std::vector<double> proj_b;   // F

    int feature_channels() const { return conv.empty() ? 0 : conv.back().out_ch; }
    int embed_dim() const { return proj_w.rows; }
};

EncoderParams init_encoder(Rng& rng, int in_ch = 1, int feat_ch = 32, int embed_dim = 32);

struct ForwardTrace {
    Image input;
    std::vector<Tensor3> pre;   // pre-activation per conv layer
    std::vector<Tensor3> act;   // post-ReLU per conv layer (act.back() == y)
    std::vector<double> pooled;     // D
    std::vector<double> pre_norm;   // F, projector output before normalization
    std::vector<double> z;          // F, unit norm
};

// Runs the stack and keeps activations for the backward pass. Throws
// NumericError on non-finite activations or a zero-norm projector output
// (degenerate embedding).
ForwardTrace encoder_forward(const EncoderParams& params, const Image& view);

struct EncoderGrads {
    std::vector<std::vector<double>> conv_w, conv_b;
    Matrix proj_w;
    std::vector<double> proj_b;
    Image input;

    void add(const EncoderGrads& o);
};

EncoderGrads zero_encoder_grads(const EncoderParams& params, int canvas);

// Chains (dL/dy, dL/dz) back through normalization, projection, pooling and
// the conv stack. grad_y may be empty (treated as zero).
EncoderGrads encoder_backward(const EncoderParams& params, const ForwardTrace& trace,
                              const Tensor3& grad_y, std::span<const double> grad_z);

}  // namespace gmssl
