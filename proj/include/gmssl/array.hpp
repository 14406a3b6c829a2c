#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gmssl/errors.hpp"

namespace gmssl {

// Dense 2-D grid of doubles, row-major. Used for images and matrices alike.
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

    double& operator()(int r, int c) { return v[size_t(r) * cols + c]; }
    double operator()(int r, int c) const { return v[size_t(r) * cols + c]; }

    size_t size() const { return v.size(); }

    const double* row(int r) const { return v.data() + size_t(r) * cols; }
    double* row(int r) { return v.data() + size_t(r) * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Grayscale image, values in [0,1] (or normalized range after augmentation).
using Image = Matrix;

// C x H x W tensor (feature maps).
struct Tensor3 {
    int ch = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_, double fill = 0.0)
        : ch(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_, fill) {}

    double& operator()(int c, int r, int s) { return v[(size_t(c) * h + r) * w + s]; }
    double operator()(int c, int r, int s) const { return v[(size_t(c) * h + r) * w + s]; }

    size_t size() const { return v.size(); }

    bool same_shape(const Tensor3& o) const { return ch == o.ch && h == o.h && w == o.w; }
};

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const double* a, int n) { return std::sqrt(dot(a, a, n)); }

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

}  // namespace gmssl
