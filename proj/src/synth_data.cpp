#include "gmssl/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gmssl/errors.hpp"

namespace gmssl {

namespace {

struct ShapeParams {
    int family;               // 0 disk, 1 ring, 2 bar, 3 cross, 4 blob
    double cx, cy;            // center, pixels
    double radius;            // principal scale, pixels
    double angle;             // rotation
    double fg, bg;            // intensities
    double noise_amp;
    double wobble_phase1, wobble_phase2;
    uint64_t noise_seed;
};

ShapeParams sample_shape(Rng& rng, int canvas) {
    ShapeParams p;
    p.family = int(rng.uniform_int(kNumShapeFamilies));
    double margin = canvas * 0.25;
    p.cx = rng.uniform(margin, canvas - margin);
    p.cy = rng.uniform(margin, canvas - margin);
    p.radius = rng.uniform(canvas * 0.12, canvas * 0.30);
    p.angle = rng.uniform(0.0, 3.14159265358979323846);
    p.fg = rng.uniform(0.55, 0.95);
    p.bg = rng.uniform(0.05, 0.30);
    p.noise_amp = rng.uniform(0.02, 0.08);
    p.wobble_phase1 = rng.uniform(0.0, 6.2831853);
    p.wobble_phase2 = rng.uniform(0.0, 6.2831853);
    p.noise_seed = rng.next_u64();
    return p;
}

double box_sdf(double x, double y, double hx, double hy) {
    double dx = std::abs(x) - hx, dy = std::abs(y) - hy;
    double ox = std::max(dx, 0.0), oy = std::max(dy, 0.0);
    return std::sqrt(ox * ox + oy * oy) + std::min(std::max(dx, dy), 0.0);
}

// Signed distance to the shape outline, negative inside.
double shape_sdf(const ShapeParams& p, double px, double py) {
    double x = px - p.cx, y = py - p.cy;
    double ca = std::cos(p.angle), sa = std::sin(p.angle);
    double u = ca * x + sa * y, v = -sa * x + ca * y;
    double r = std::sqrt(x * x + y * y);
    switch (p.family) {
        case 0:  // disk
            return r - p.radius;
        case 1:  // ring
            return std::abs(r - p.radius) - p.radius * 0.35;
        case 2:  // bar
            return box_sdf(u, v, p.radius, p.radius * 0.33);
        case 3:  // cross
            return std::min(box_sdf(u, v, p.radius, p.radius * 0.28),
                            box_sdf(u, v, p.radius * 0.28, p.radius));
        default: {  // blob: radially wobbled disk
            double phi = std::atan2(y, x);
            double rr = p.radius * (1.0 + 0.22 * std::sin(3.0 * phi + p.wobble_phase1) +
                                    0.13 * std::sin(5.0 * phi + p.wobble_phase2));
            return r - rr;
        }
    }
}

// Smooth value noise: bilinear interpolation of a hash-seeded lattice,
// anchored to the canvas so duplicate jitter moves only the shape.
double value_noise(uint64_t seed, double x, double y, int canvas) {
    const int grid = 9;
    double gx = x / canvas * (grid - 1), gy = y / canvas * (grid - 1);
    int ix = std::clamp(int(std::floor(gx)), 0, grid - 2);
    int iy = std::clamp(int(std::floor(gy)), 0, grid - 2);
    double fx = gx - ix, fy = gy - iy;
    auto lattice = [&](int i, int j) {
        uint64_t z = seed ^ (uint64_t(i) * 0x9e3779b97f4a7c15ULL + uint64_t(j) * 0xbf58476d1ce4e5b9ULL + 0x1234567);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return double(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    };
    double n00 = lattice(ix, iy), n10 = lattice(ix + 1, iy);
    double n01 = lattice(ix, iy + 1), n11 = lattice(ix + 1, iy + 1);
    return (n00 * (1 - fx) + n10 * fx) * (1 - fy) + (n01 * (1 - fx) + n11 * fx) * fy;
}

Image render(const ShapeParams& p, int canvas) {
    Image img(canvas, canvas);
    const double edge = 1.0;  // antialiasing width in pixels
    for (int r = 0; r < canvas; ++r)
        for (int c = 0; c < canvas; ++c) {
            double d = shape_sdf(p, double(c), double(r));
            double cover = std::clamp(0.5 - d / edge, 0.0, 1.0);
            double val = p.bg + (p.fg - p.bg) * cover +
                         p.noise_amp * value_noise(p.noise_seed, double(c), double(r), canvas);
            img(r, c) = std::clamp(val, 0.0, 1.0);
        }
    return img;
}

double mean_abs_diff(const Image& a, const Image& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) s += std::abs(a.v[i] - b.v[i]);
    return s / double(a.v.size());
}

}  // namespace

Corpus generate_corpus(uint64_t seed, int count, double dup_fraction, int canvas) {
    if (count < 1) throw ParamError("generate_corpus: count must be >= 1");
    if (dup_fraction < 0.0 || dup_fraction > 1.0)
        throw ParamError("generate_corpus: dup_fraction must be in [0,1]");

    Corpus corpus;
    corpus.seed = seed;
    corpus.dup_fraction = dup_fraction;
    corpus.canvas = canvas;

    int n_groups = int(std::llround(dup_fraction * count / 2.0));
    n_groups = std::min(n_groups, count / 2);
    int n_single = count - 2 * n_groups;

    Rng rng(derive_seed(seed, "corpus"));
    corpus.images.reserve(count);
    for (int i = 0; i < n_single; ++i) {
        SourceImage im;
        ShapeParams p = sample_shape(rng, canvas);
        im.pixels = render(p, canvas);
        im.class_tag = p.family;
        corpus.images.push_back(std::move(im));
    }
    for (int g = 0; g < n_groups; ++g) {
        ShapeParams p = sample_shape(rng, canvas);
        double dir = rng.uniform(0.0, 6.2831853);
        ShapeParams q = p;
        q.cx += 0.5 * std::cos(dir);  // 0.5 px jitter keeps the pair ambiguous
        q.cy += 0.5 * std::sin(dir);

        SourceImage base, dup;
        base.pixels = render(p, canvas);
        dup.pixels = render(q, canvas);
        base.class_tag = dup.class_tag = p.family;
        base.dup_group = dup.dup_group = g;
        if (mean_abs_diff(base.pixels, dup.pixels) >= 0.05)
            throw NumericError("generate_corpus: duplicate pair exceeds 0.05 MAD bound");
        if (base.pixels.v == dup.pixels.v)
            throw NumericError("generate_corpus: duplicate pair is pixel-identical");
        corpus.images.push_back(std::move(base));
        corpus.images.push_back(std::move(dup));
    }

    // Shuffle singles and pairs as blocks (pairs stay adjacent) so any
    // contiguous corpus slice carries its share of intact duplicate pairs.
    std::vector<std::pair<int, int>> blocks;  // (start, len)
    for (int i = 0; i < n_single; ++i) blocks.push_back({i, 1});
    for (int g = 0; g < n_groups; ++g) blocks.push_back({n_single + 2 * g, 2});
    Rng shuffle_rng(derive_seed(seed, "corpus_shuffle"));
    for (size_t i = blocks.size(); i > 1; --i)
        std::swap(blocks[i - 1], blocks[shuffle_rng.uniform_int(i)]);
    std::vector<SourceImage> shuffled;
    shuffled.reserve(corpus.images.size());
    for (auto [start, len] : blocks)
        for (int k = 0; k < len; ++k) shuffled.push_back(std::move(corpus.images[start + k]));
    corpus.images = std::move(shuffled);
    return corpus;
}

std::vector<int> sample_batch_indices(const Corpus& corpus, Rng& rng, int batch_size) {
    int n = int(corpus.images.size());
    if (batch_size > n) throw ParamError("sample_batch: batch_size exceeds corpus size");
    if (batch_size < 1) throw ParamError("sample_batch: batch_size must be >= 1");
    return sample_distinct(rng, n, batch_size);
}

std::vector<SourceImage> sample_batch(const Corpus& corpus, Rng& rng, int batch_size) {
    std::vector<SourceImage> out;
    out.reserve(batch_size);
    for (int i : sample_batch_indices(corpus, rng, batch_size)) out.push_back(corpus.images[i]);
    return out;
}

void write_pgm(const Image& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParamError("write_pgm: cannot open " + path);
    f << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    std::vector<unsigned char> bytes(img.v.size());
    for (size_t i = 0; i < img.v.size(); ++i)
        bytes[i] = (unsigned char)std::lround(std::clamp(img.v[i], 0.0, 1.0) * 255.0);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
    std::filesystem::create_directories(dir);
    char name[64];
    for (size_t i = 0; i < corpus.images.size(); ++i) {
        std::snprintf(name, sizeof name, "img_%05zu.pgm", i);
        write_pgm(corpus.images[i].pixels, dir + "/" + name);
    }
    std::ofstream mf(dir + "/manifest.txt");
    if (!mf) throw ParamError("write_corpus: cannot open manifest in " + dir);
    for (size_t i = 0; i < corpus.images.size(); ++i)
        mf << i << " " << corpus.images[i].class_tag << " " << corpus.images[i].dup_group << "\n";
}

}  // namespace gmssl
