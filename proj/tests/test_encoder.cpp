#include "doctest.h"
#include "gmssl/encoder.hpp"
#include "gmssl/errors.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace gmssl;

namespace {

Image random_view(Rng& rng, int n = 64) {
    Image img(n, n);
    for (auto& v : img.v) v = rng.uniform(-1.0, 1.0);
    return img;
}

// fixed random linear probe loss: L = sum(u .* z) + sum(V .* y)
struct ProbeLoss {
    std::vector<double> u;
    Tensor3 v;

    ProbeLoss(Rng& rng, int F, int D, int R, int S) : v(D, R, S) {
        u.resize(F);
        for (auto& x : u) x = rng.uniform(-1.0, 1.0);
        for (auto& x : v.v) x = rng.uniform(-1.0, 1.0);
    }

    double eval(const EncoderParams& p, const Image& img) const {
        ForwardTrace t = encoder_forward(p, img);
        double L = 0.0;
        for (size_t i = 0; i < u.size(); ++i) L += u[i] * t.z[i];
        const Tensor3& y = t.act.back();
        for (size_t i = 0; i < y.v.size(); ++i) L += v.v[i] * y.v[i];
        return L;
    }
};

}  // namespace

TEST_CASE("forward produces the documented shapes and a unit embedding") {
    Rng rng(1);
    EncoderParams p = init_encoder(rng);
    Image img = random_view(rng);
    ForwardTrace t = encoder_forward(p, img);
    const Tensor3& y = t.act.back();
    CHECK(y.ch == 32);
    CHECK(y.h == 8);
    CHECK(y.w == 8);
    CHECK(t.z.size() == 32);
    CHECK(norm2(t.z.data(), 32) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pooled equals an independent spatial mean") {
    Rng rng(2);
    EncoderParams p = init_encoder(rng);
    Image img = random_view(rng);
    ForwardTrace t = encoder_forward(p, img);
    const Tensor3& y = t.act.back();
    for (int d = 0; d < y.ch; ++d) {
        double s = 0.0;
        for (int r = 0; r < y.h; ++r)
            for (int c = 0; c < y.w; ++c) s += y(d, r, c);
        CHECK(t.pooled[d] == doctest::Approx(s / (y.h * y.w)).epsilon(1e-12));
    }
}

TEST_CASE("zero parameters report a degenerate embedding") {
    Rng rng(3);
    EncoderParams p = init_encoder(rng);
    for (auto& l : p.conv) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    std::fill(p.proj_w.v.begin(), p.proj_w.v.end(), 0.0);
    std::fill(p.proj_b.begin(), p.proj_b.end(), 0.0);
    Image img = random_view(rng);
    CHECK_THROWS_AS(encoder_forward(p, img), NumericError);
}

TEST_CASE("forward is deterministic") {
    Rng rng(4);
    EncoderParams p = init_encoder(rng);
    Image img = random_view(rng);
    ForwardTrace a = encoder_forward(p, img);
    ForwardTrace b = encoder_forward(p, img);
    CHECK(a.z == b.z);
    CHECK(a.act.back().v == b.act.back().v);
}

TEST_CASE("zero upstream gradients give zero parameter gradients") {
    Rng rng(5);
    EncoderParams p = init_encoder(rng);
    Image img = random_view(rng);
    ForwardTrace t = encoder_forward(p, img);
    Tensor3 gy(32, 8, 8);
    std::vector<double> gz(32, 0.0);
    EncoderGrads g = encoder_backward(p, t, gy, gz);
    for (auto& wv : g.conv_w)
        for (double x : wv) CHECK(x == 0.0);
    for (double x : g.proj_w.v) CHECK(x == 0.0);
}

TEST_CASE("gradient through normalization is orthogonal to z") {
    Rng rng(6);
    EncoderParams p = init_encoder(rng);
    Image img = random_view(rng);
    ForwardTrace t = encoder_forward(p, img);
    int F = p.embed_dim();
    std::vector<double> gz(F);
    for (auto& x : gz) x = rng.uniform(-1.0, 1.0);

    // du = (gz - z (z . gz)) / |u| must satisfy du . z == 0
    double n = norm2(t.pre_norm.data(), F);
    double zdg = dot(t.z.data(), gz.data(), F);
    std::vector<double> du(F);
    for (int f = 0; f < F; ++f) du[f] = (gz[f] - t.z[f] * zdg) / n;
    CHECK(std::abs(dot(du.data(), t.z.data(), F)) < 1e-10);
}

TEST_CASE("backward matches central finite differences on every tensor") {
    Rng rng(7);
    EncoderParams p = init_encoder(rng);
    Image img = random_view(rng);
    ProbeLoss loss(rng, 32, 32, 8, 8);

    ForwardTrace t = encoder_forward(p, img);
    EncoderGrads g = encoder_backward(p, t, loss.v, loss.u);

    auto eval = [&] { return loss.eval(p, img); };
    const double h = 1e-4;

    // biases and projector: all elements; conv weights: strided subsample
    for (size_t l = 0; l < p.conv.size(); ++l) {
        auto& layer = p.conv[l];
        size_t stride = std::max<size_t>(1, layer.w.size() / 40);
        for (size_t i = 0; i < layer.w.size(); i += stride) {
            double fd = testsup::central_diff(eval, &layer.w[i], h);
            CHECK(testsup::rel_err(g.conv_w[l][i], fd) < 1e-4);
        }
        for (size_t i = 0; i < layer.b.size(); ++i) {
            double fd = testsup::central_diff(eval, &layer.b[i], h);
            CHECK(testsup::rel_err(g.conv_b[l][i], fd) < 1e-4);
        }
    }
    for (size_t i = 0; i < p.proj_w.v.size(); i += 7) {
        double fd = testsup::central_diff(eval, &p.proj_w.v[i], h);
        CHECK(testsup::rel_err(g.proj_w.v[i], fd) < 1e-4);
    }
    for (size_t i = 0; i < p.proj_b.size(); ++i) {
        double fd = testsup::central_diff(eval, &p.proj_b[i], h);
        CHECK(testsup::rel_err(g.proj_b[i], fd) < 1e-4);
    }

    // input gradient on a few pixels
    for (size_t i = 0; i < img.v.size(); i += 509) {
        double fd = testsup::central_diff(eval, &img.v[i], h);
        CHECK(testsup::rel_err(g.input.v[i], fd) < 1e-4);
    }
}

TEST_CASE("backward rejects mismatched shapes") {
    Rng rng(8);
    EncoderParams p = init_encoder(rng);
    Image img = random_view(rng);
    ForwardTrace t = encoder_forward(p, img);
    Tensor3 bad(3, 3, 3);
    std::vector<double> gz(32, 0.0);
    CHECK_THROWS_AS(encoder_backward(p, t, bad, gz), ContractError);
    std::vector<double> bad_z(7, 0.0);
    CHECK_THROWS_AS(encoder_backward(p, t, Tensor3(), bad_z), ContractError);
}
