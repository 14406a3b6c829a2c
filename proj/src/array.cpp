#include "gmssl/array.hpp"

namespace gmssl {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ContractError("matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* br = b.row(k);
            double* cr = c.row(i);
            for (int j = 0; j < b.cols; ++j) cr[j] += aik * br[j];
        }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ContractError("matmul_tn: inner dimensions differ");
    Matrix c(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k)
        for (int i = 0; i < a.cols; ++i) {
            double aki = a(k, i);
            if (aki == 0.0) continue;
            const double* br = b.row(k);
            double* cr = c.row(i);
            for (int j = 0; j < b.cols; ++j) cr[j] += aki * br[j];
        }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw ContractError("matmul_nt: inner dimensions differ");
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) c(i, j) = dot(a.row(i), b.row(j), a.cols);
    return c;
}

}  // namespace gmssl
