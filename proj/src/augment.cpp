#include "gmssl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gmssl/errors.hpp"

namespace gmssl {

std::string TransformSpec::to_line() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "crop:%.17g,%.17g,%.17g flip:%d bright:%.17g contrast:%.17g blur:%.17g norm:%d",
                  crop_r0, crop_c0, crop_side, hflip ? 1 : 0, brightness, contrast, blur_sigma,
                  normalize ? 1 : 0);
    return buf;
}

TransformSpec TransformSpec::from_line(const std::string& line) {
    TransformSpec s;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        auto colon = tok.find(':');
        if (colon == std::string::npos) throw ParamError("TransformSpec: bad token " + tok);
        std::string op = tok.substr(0, colon), args = tok.substr(colon + 1);
        if (op == "crop") {
            if (std::sscanf(args.c_str(), "%lf,%lf,%lf", &s.crop_r0, &s.crop_c0, &s.crop_side) != 3)
                throw ParamError("TransformSpec: bad crop args");
        } else if (op == "flip") {
            s.hflip = args == "1";
        } else if (op == "bright") {
            s.brightness = std::stod(args);
        } else if (op == "contrast") {
            s.contrast = std::stod(args);
        } else if (op == "blur") {
            s.blur_sigma = std::stod(args);
        } else if (op == "norm") {
            s.normalize = args == "1";
        } else {
            throw ParamError("TransformSpec: unknown op " + op);
        }
    }
    return s;
}

TransformSpec identity_spec(int canvas) {
    TransformSpec s;
    s.crop_side = canvas;
    return s;
}

TransformSpec sample_transform(Rng& rng, int canvas) {
    TransformSpec s;
    double area = rng.uniform(0.5, 1.0);
    s.crop_side = std::sqrt(area) * canvas;
    s.crop_r0 = rng.uniform(0.0, canvas - s.crop_side);
    s.crop_c0 = rng.uniform(0.0, canvas - s.crop_side);
    s.hflip = rng.bernoulli(0.5);
    s.brightness = rng.uniform(-0.2, 0.2);
    s.contrast = rng.uniform(0.8, 1.2);
    s.blur_sigma = rng.bernoulli(0.5) ? rng.uniform(0.2, 1.0) : 0.0;
    s.normalize = true;
    return s;
}

namespace {

double sample_bilinear(const Image& img, double r, double c) {
    double rc = std::clamp(r, 0.0, double(img.rows - 1));
    double cc = std::clamp(c, 0.0, double(img.cols - 1));
    int r0 = std::min(int(std::floor(rc)), img.rows - 2 >= 0 ? img.rows - 2 : 0);
    int c0 = std::min(int(std::floor(cc)), img.cols - 2 >= 0 ? img.cols - 2 : 0);
    if (img.rows == 1) r0 = 0;
    if (img.cols == 1) c0 = 0;
    double fr = rc - r0, fc = cc - c0;
    int r1 = std::min(r0 + 1, img.rows - 1), c1 = std::min(c0 + 1, img.cols - 1);
    double v00 = img(r0, c0), v01 = img(r0, c1), v10 = img(r1, c0), v11 = img(r1, c1);
    // exact when fr or fc is 0, so integer-aligned crops copy pixels untouched
    double top = (fc == 0.0) ? v00 : v00 * (1 - fc) + v01 * fc;
    double bot = (fc == 0.0) ? v10 : v10 * (1 - fc) + v11 * fc;
    return (fr == 0.0) ? top : top * (1 - fr) + bot * fr;
}

void gaussian_blur_inplace(Image& img, double sigma) {
    int radius = int(std::ceil(3.0 * sigma));
    if (radius < 1) return;
    std::vector<double> k(radius + 1);
    double sum = 0.0;
    for (int i = 0; i <= radius; ++i) {
        k[i] = std::exp(-0.5 * (double(i) / sigma) * (double(i) / sigma));
        sum += (i == 0) ? k[i] : 2.0 * k[i];
    }
    for (auto& x : k) x /= sum;

    Image tmp(img.rows, img.cols);
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            double acc = k[0] * img(r, c);
            for (int i = 1; i <= radius; ++i) {
                int cl = std::max(c - i, 0), cr = std::min(c + i, img.cols - 1);
                acc += k[i] * (img(r, cl) + img(r, cr));
            }
            tmp(r, c) = acc;
        }
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            double acc = k[0] * tmp(r, c);
            for (int i = 1; i <= radius; ++i) {
                int ru = std::max(r - i, 0), rd = std::min(r + i, img.rows - 1);
                acc += k[i] * (tmp(ru, c) + tmp(rd, c));
            }
            img(r, c) = acc;
        }
}

}  // namespace

View apply(const Image& image, const TransformSpec& spec) {
    const int H = image.rows, W = image.cols;
    View out;
    out.pixels = Image(H, W);
    out.pos = PosMap(H, W);

    double side = spec.crop_side > 0.0 ? spec.crop_side : double(W);
    double sf_r = side / double(H), sf_c = side / double(W);

    bool identity_geom = !spec.hflip && spec.crop_r0 == 0.0 && spec.crop_c0 == 0.0 && side == double(W) && H == W;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            int cc = spec.hflip ? (W - 1 - c) : c;
            double sr = spec.crop_r0 + r * sf_r;
            double sc = spec.crop_c0 + cc * sf_c;
            size_t i = out.pos.idx(r, c);
            out.pos.row[i] = sr;
            out.pos.col[i] = sc;
            bool inside = sr >= 0.0 && sr <= H - 1 && sc >= 0.0 && sc <= W - 1;
            out.pos.valid[i] = inside ? 1 : 0;
            out.pixels(r, c) = identity_geom ? image(r, c) : sample_bilinear(image, sr, sc);
        }

    if (spec.brightness != 0.0 || spec.contrast != 1.0) {
        for (auto& v : out.pixels.v)
            v = std::clamp((v - 0.5) * spec.contrast + 0.5 + spec.brightness, 0.0, 1.0);
    }
    if (spec.blur_sigma > 0.0) gaussian_blur_inplace(out.pixels, spec.blur_sigma);
    if (spec.normalize) {
        for (auto& v : out.pixels.v) v = (v - 0.5) * 2.0;
    }
    return out;
}

PosMap chain_positions(const PosMap& prev, const PosMap& cur) {
    PosMap out(cur.h, cur.w);
    for (int r = 0; r < cur.h; ++r)
        for (int c = 0; c < cur.w; ++c) {
            size_t i = out.idx(r, c);
            if (!cur.valid[i]) continue;
            double pr = cur.row[i], pc = cur.col[i];
            if (pr < 0.0 || pr > prev.h - 1 || pc < 0.0 || pc > prev.w - 1) continue;
            int r0 = std::min(int(std::floor(pr)), prev.h - 1);
            int c0 = std::min(int(std::floor(pc)), prev.w - 1);
            double fr = pr - r0, fc = pc - c0;
            int r1 = std::min(r0 + 1, prev.h - 1), c1 = std::min(c0 + 1, prev.w - 1);

            double wr = 0.0, wc = 0.0, wsum = 0.0;
            bool ok = true;
            const double wts[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
            const int rs[4] = {r0, r0, r1, r1}, cs[4] = {c0, c1, c0, c1};
            for (int t = 0; t < 4; ++t) {
                if (wts[t] == 0.0) continue;
                size_t j = prev.idx(rs[t], cs[t]);
                if (!prev.valid[j]) { ok = false; break; }
                wr += wts[t] * prev.row[j];
                wc += wts[t] * prev.col[j];
                wsum += wts[t];
            }
            if (!ok || wsum == 0.0) continue;
            out.row[i] = wr / wsum;
            out.col[i] = wc / wsum;
            out.valid[i] = 1;
        }
    return out;
}

std::vector<ViewPair> make_view_pairs(const std::vector<SourceImage>& batch, Rng& rng) {
    if (batch.empty()) throw ParamError("make_view_pairs: empty batch");
    std::vector<ViewPair> pairs;
    pairs.reserve(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        const Image& img = batch[i].pixels;
        TransformSpec ss = sample_transform(rng, img.cols);
        TransformSpec st = sample_transform(rng, img.cols);
        View vs = apply(img, ss), vt = apply(img, st);
        ViewPair p;
        p.view_s = std::move(vs.pixels);
        p.pos_s = std::move(vs.pos);
        p.view_t = std::move(vt.pixels);
        p.pos_t = std::move(vt.pos);
        p.source_index = int(i);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

PosMap downsample_positions(const PosMap& pos, int out_h, int out_w) {
    PosMap out(out_h, out_w);
    for (int R = 0; R < out_h; ++R)
        for (int S = 0; S < out_w; ++S) {
            int r_lo = R * pos.h / out_h, r_hi = (R + 1) * pos.h / out_h;
            int c_lo = S * pos.w / out_w, c_hi = (S + 1) * pos.w / out_w;
            double sr = 0.0, sc = 0.0;
            int cnt = 0;
            for (int r = r_lo; r < r_hi; ++r)
                for (int c = c_lo; c < c_hi; ++c) {
                    size_t i = pos.idx(r, c);
                    if (!pos.valid[i]) continue;
                    sr += pos.row[i];
                    sc += pos.col[i];
                    ++cnt;
                }
            if (cnt == 0) continue;
            size_t o = out.idx(R, S);
            out.row[o] = sr / cnt;
            out.col[o] = sc / cnt;
            out.valid[o] = 1;
        }
    return out;
}

}  // namespace gmssl
