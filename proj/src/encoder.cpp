#include "gmssl/encoder.hpp"

#include <cmath>

#include "gmssl/errors.hpp"

namespace gmssl {

namespace {

// Keeps every stored parameter representable as a 32-bit float so that the
// f32 checkpoint format round-trips losslessly (math still runs in double).
double f32(double x) { return double(float(x)); }

int out_dim(int in, const ConvLayer& l) { return (in + 2 * l.pad - l.ksize) / l.stride + 1; }

Tensor3 conv_forward(const ConvLayer& l, const Tensor3& x) {
    int oh = out_dim(x.h, l), ow = out_dim(x.w, l);
    Tensor3 y(l.out_ch, oh, ow);
    for (int o = 0; o < l.out_ch; ++o)
        for (int r = 0; r < oh; ++r)
            for (int c = 0; c < ow; ++c) {
                double acc = l.b[o];
                for (int i = 0; i < l.in_ch; ++i)
                    for (int kr = 0; kr < l.ksize; ++kr) {
                        int ir = r * l.stride - l.pad + kr;
                        if (ir < 0 || ir >= x.h) continue;
                        for (int kc = 0; kc < l.ksize; ++kc) {
                            int ic = c * l.stride - l.pad + kc;
                            if (ic < 0 || ic >= x.w) continue;
                            acc += l.w[l.widx(o, i, kr, kc)] * x(i, ir, ic);
                        }
                    }
                y(o, r, c) = acc;
            }
    return y;
}

void conv_backward(const ConvLayer& l, const Tensor3& x, const Tensor3& dy,
                   std::vector<double>& dw, std::vector<double>& db, Tensor3& dx) {
    for (int o = 0; o < l.out_ch; ++o)
        for (int r = 0; r < dy.h; ++r)
            for (int c = 0; c < dy.w; ++c) {
                double g = dy(o, r, c);
                if (g == 0.0) continue;
                db[o] += g;
                for (int i = 0; i < l.in_ch; ++i)
                    for (int kr = 0; kr < l.ksize; ++kr) {
                        int ir = r * l.stride - l.pad + kr;
                        if (ir < 0 || ir >= x.h) continue;
                        for (int kc = 0; kc < l.ksize; ++kc) {
                            int ic = c * l.stride - l.pad + kc;
                            if (ic < 0 || ic >= x.w) continue;
                            dw[l.widx(o, i, kr, kc)] += g * x(i, ir, ic);
                            dx(i, ir, ic) += g * l.w[l.widx(o, i, kr, kc)];
                        }
                    }
            }
}

}  // namespace

EncoderParams init_encoder(Rng& rng, int in_ch, int feat_ch, int embed_dim) {
    EncoderParams p;
    int chans[4] = {in_ch, feat_ch / 4, feat_ch / 2, feat_ch};
    for (int l = 0; l < 3; ++l) {
        ConvLayer layer;
        layer.in_ch = chans[l];
        layer.out_ch = chans[l + 1];
        layer.w.resize(size_t(layer.out_ch) * layer.in_ch * layer.ksize * layer.ksize);
        layer.b.assign(layer.out_ch, 0.0);
        double scale = std::sqrt(2.0 / (layer.in_ch * layer.ksize * layer.ksize));
        for (auto& w : layer.w) w = f32(rng.normal() * scale);
        p.conv.push_back(std::move(layer));
    }
    p.proj_w = Matrix(embed_dim, feat_ch);
    double scale = std::sqrt(1.0 / feat_ch);
    for (auto& w : p.proj_w.v) w = f32(rng.normal() * scale);
    p.proj_b.assign(embed_dim, 0.0);
    return p;
}

ForwardTrace encoder_forward(const EncoderParams& params, const Image& view) {
    ForwardTrace t;
    t.input = view;
    Tensor3 x(1, view.rows, view.cols);
    x.v = view.v;
    for (const auto& layer : params.conv) {
        Tensor3 pre = conv_forward(layer, x);
        if (!all_finite(pre.v)) throw NumericError("encoder_forward: non-finite activation");
        Tensor3 act = pre;
        for (auto& v : act.v) v = v > 0.0 ? v : 0.0;
        t.pre.push_back(std::move(pre));
        t.act.push_back(act);
        x = std::move(act);
    }
    const Tensor3& y = t.act.back();
    int D = y.ch, cell = y.h * y.w;
    t.pooled.assign(D, 0.0);
    for (int d = 0; d < D; ++d) {
        double s = 0.0;
        for (int r = 0; r < y.h; ++r)
            for (int c = 0; c < y.w; ++c) s += y(d, r, c);
        t.pooled[d] = s / cell;
    }
    int F = params.embed_dim();
    t.pre_norm.assign(F, 0.0);
    for (int f = 0; f < F; ++f)
        t.pre_norm[f] = params.proj_b[f] + dot(params.proj_w.row(f), t.pooled.data(), D);
    double n = norm2(t.pre_norm.data(), F);
    if (!std::isfinite(n)) throw NumericError("encoder_forward: non-finite embedding");
    if (n < 1e-12) throw NumericError("encoder_forward: degenerate embedding (zero norm)");
    t.z.assign(F, 0.0);
    for (int f = 0; f < F; ++f) t.z[f] = t.pre_norm[f] / n;
    return t;
}

void EncoderGrads::add(const EncoderGrads& o) {
    for (size_t l = 0; l < conv_w.size(); ++l) {
        for (size_t i = 0; i < conv_w[l].size(); ++i) conv_w[l][i] += o.conv_w[l][i];
        for (size_t i = 0; i < conv_b[l].size(); ++i) conv_b[l][i] += o.conv_b[l][i];
    }
    for (size_t i = 0; i < proj_w.v.size(); ++i) proj_w.v[i] += o.proj_w.v[i];
    for (size_t i = 0; i < proj_b.size(); ++i) proj_b[i] += o.proj_b[i];
    for (size_t i = 0; i < input.v.size(); ++i) input.v[i] += o.input.v[i];
}

EncoderGrads zero_encoder_grads(const EncoderParams& params, int canvas) {
    EncoderGrads g;
    for (const auto& l : params.conv) {
        g.conv_w.emplace_back(l.w.size(), 0.0);
        g.conv_b.emplace_back(l.b.size(), 0.0);
    }
    g.proj_w = Matrix(params.proj_w.rows, params.proj_w.cols);
    g.proj_b.assign(params.proj_b.size(), 0.0);
    g.input = Image(canvas, canvas);
    return g;
}

EncoderGrads encoder_backward(const EncoderParams& params, const ForwardTrace& trace,
                              const Tensor3& grad_y, std::span<const double> grad_z) {
    const Tensor3& y = trace.act.back();
    int D = y.ch, F = params.embed_dim();
    if (!grad_y.v.empty() && !grad_y.same_shape(y))
        throw ContractError("encoder_backward: grad_y shape mismatch");
    if (!grad_z.empty() && int(grad_z.size()) != F)
        throw ContractError("encoder_backward: grad_z size mismatch");

    EncoderGrads g = zero_encoder_grads(params, trace.input.rows);

    // z = u / |u|  =>  du = (dz - z (z . dz)) / |u|
    std::vector<double> du(F, 0.0);
    if (!grad_z.empty()) {
        double n = norm2(trace.pre_norm.data(), F);
        double zdg = dot(trace.z.data(), grad_z.data(), F);
        for (int f = 0; f < F; ++f) du[f] = (grad_z[f] - trace.z[f] * zdg) / n;
    }
    std::vector<double> dpooled(D, 0.0);
    for (int f = 0; f < F; ++f) {
        double d = du[f];
        if (d == 0.0) continue;
        g.proj_b[f] += d;
        for (int k = 0; k < D; ++k) {
            g.proj_w(f, k) += d * trace.pooled[k];
            dpooled[k] += d * params.proj_w(f, k);
        }
    }

    Tensor3 dy(y.ch, y.h, y.w);
    if (!grad_y.v.empty()) dy.v = grad_y.v;
    double inv_cell = 1.0 / (y.h * y.w);
    for (int d = 0; d < D; ++d) {
        if (dpooled[d] == 0.0) continue;
        for (int r = 0; r < y.h; ++r)
            for (int c = 0; c < y.w; ++c) dy(d, r, c) += dpooled[d] * inv_cell;
    }

    // back through the conv stack
    Tensor3 dcur = std::move(dy);
    for (int l = int(params.conv.size()) - 1; l >= 0; --l) {
        const Tensor3& pre = trace.pre[l];
        for (size_t i = 0; i < dcur.v.size(); ++i)
            if (pre.v[i] <= 0.0) dcur.v[i] = 0.0;  // ReLU mask
        const Tensor3* below;
        Tensor3 input_t;
        if (l == 0) {
            input_t = Tensor3(1, trace.input.rows, trace.input.cols);
            input_t.v = trace.input.v;
            below = &input_t;
        } else {
            below = &trace.act[l - 1];
        }
        Tensor3 dx(below->ch, below->h, below->w);
        conv_backward(params.conv[l], *below, dcur, g.conv_w[l], g.conv_b[l], dx);
        dcur = std::move(dx);
    }
    g.input.v = dcur.v;
    return g;
}

}  // namespace gmssl
