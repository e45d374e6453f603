#pragma once

#include <cstddef>
#include <string>

namespace embedalign {

// Runtime-selected kernel backend. Scalar is the reference; the SIMD
// variants vectorize across independent output elements only, so every
// backend produces bit-identical results (equivalence-tested).
enum class Backend { Scalar, Avx2, Neon };

Backend detect_backend();
Backend active_backend();
void set_backend(Backend b);  // throws ParameterError if unsupported on this host
const char* backend_name(Backend b);
bool backend_supported(Backend b);

namespace kern {

// c[m x n] = a[m x k] * b[k x n]. Per output element the accumulation runs
// over p = 0..k-1 in ascending order, in double, stored as float.
void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n);

// y[i][j] += bias[j]
void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols);

void relu_fwd(const float* x, float* y, std::size_t n);
// gx = gy where x > 0 else 0 (subgradient at 0 is 0)
void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n);

// out[j] = sum over rows of g[i][j], double accumulation in row order.
void colsum(const float* g, float* out, std::size_t rows, std::size_t cols);

// Decoupled-weight-decay Adam update, elementwise in double:
//   m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2
//   p <- p - lr*wd*p - lr*(m/bc1) / (sqrt(v/bc2) + eps)
// bc1/bc2 are the bias corrections 1-b1^t, 1-b2^t.
void adamw_update(float* p, const float* g, float* m, float* v, std::size_t n,
                  double lr, double b1, double b2, double eps, double wd,
                  double bc1, double bc2);

namespace scalar {
void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n);
void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols);
void relu_fwd(const float* x, float* y, std::size_t n);
void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n);
void colsum(const float* g, float* out, std::size_t rows, std::size_t cols);
void adamw_update(float* p, const float* g, float* m, float* v, std::size_t n,
                  double lr, double b1, double b2, double eps, double wd,
                  double bc1, double bc2);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define EMBEDALIGN_HAVE_AVX2_BUILD 1
namespace avx2 {
void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n);
void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols);
void relu_fwd(const float* x, float* y, std::size_t n);
void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n);
void colsum(const float* g, float* out, std::size_t rows, std::size_t cols);
void adamw_update(float* p, const float* g, float* m, float* v, std::size_t n,
                  double lr, double b1, double b2, double eps, double wd,
                  double bc1, double bc2);
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define EMBEDALIGN_HAVE_NEON_BUILD 1
namespace neon {
void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n);
void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols);
void relu_fwd(const float* x, float* y, std::size_t n);
void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n);
void colsum(const float* g, float* out, std::size_t rows, std::size_t cols);
void adamw_update(float* p, const float* g, float* m, float* v, std::size_t n,
                  double lr, double b1, double b2, double eps, double wd,
                  double bc1, double bc2);
}  // namespace neon
#endif

}  // namespace kern
}  // namespace embedalign
