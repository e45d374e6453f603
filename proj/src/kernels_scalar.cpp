#include <cmath>
#include <vector>

#include "embedalign/kernels.hpp"

// Reference kernels. The SIMD backends must reproduce these bit-for-bit:
// each output element sees the same operation sequence and rounding.

namespace embedalign::kern::scalar {

void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += static_cast<double>(arow[p]) * static_cast<double>(b[p * n + j]);
            }
            crow[j] = static_cast<float>(acc);
        }
    }
}

void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        float* yrow = y + i * cols;
        for (std::size_t j = 0; j < cols; ++j) yrow[j] += bias[j];
    }
}

void relu_fwd(const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

void colsum(const float* g, float* out, std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0f;
    // double accumulators per column, row-major traversal
    std::vector<double> acc(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        const float* grow = g + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc[j] += static_cast<double>(grow[j]);
    }
    for (std::size_t j = 0; j < cols; ++j) out[j] = static_cast<float>(acc[j]);
}

void adamw_update(float* p, const float* g, float* m, float* v, std::size_t n,
                  double lr, double b1, double b2, double eps, double wd,
                  double bc1, double bc2) {
    const double omb1 = 1.0 - b1;
    const double omb2 = 1.0 - b2;
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = b1 * static_cast<double>(m[i]) + omb1 * gi;
        const double vi = b2 * static_cast<double>(v[i]) + omb2 * (gi * gi);
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        const double pi = static_cast<double>(p[i]);
        const double upd = lr * mhat / (std::sqrt(vhat) + eps);
        const double decay = lr * wd * pi;
        p[i] = static_cast<float>(pi - decay - upd);
    }
}

}  // namespace embedalign::kern::scalar
