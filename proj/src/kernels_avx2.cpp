#include "embedalign/kernels.hpp"

#ifdef EMBEDALIGN_HAVE_AVX2_BUILD

#include <immintrin.h>

#include <cmath>

// AVX2 variants. Vector lanes hold independent output elements, so each
// element goes through the same double-precision operation sequence as the
// scalar reference and the results are bit-identical. Requires
// -ffp-contract=off on the scalar TU (no stray FMA contraction).

namespace embedalign::kern::avx2 {

void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (std::size_t j = 0; j < n4; j += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t p = 0; p < k; ++p) {
                __m256d va = _mm256_set1_pd(static_cast<double>(arow[p]));
                __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b + p * n + j));
                acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
            }
            _mm_storeu_ps(crow + j, _mm256_cvtpd_ps(acc));
        }
        for (std::size_t j = n4; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += static_cast<double>(arow[p]) * static_cast<double>(b[p * n + j]);
            }
            crow[j] = static_cast<float>(acc);
        }
    }
}

void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols) {
    const std::size_t c8 = cols & ~std::size_t(7);
    for (std::size_t i = 0; i < rows; ++i) {
        float* yrow = y + i * cols;
        std::size_t j = 0;
        for (; j < c8; j += 8) {
            __m256 vy = _mm256_loadu_ps(yrow + j);
            __m256 vb = _mm256_loadu_ps(bias + j);
            _mm256_storeu_ps(yrow + j, _mm256_add_ps(vy, vb));
        }
        for (; j < cols; ++j) yrow[j] += bias[j];
    }
}

void relu_fwd(const float* x, float* y, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    const std::size_t n8 = n & ~std::size_t(7);
    std::size_t i = 0;
    for (; i < n8; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        __m256 mask = _mm256_cmp_ps(vx, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(y + i, _mm256_and_ps(vx, mask));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    const std::size_t n8 = n & ~std::size_t(7);
    std::size_t i = 0;
    for (; i < n8; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        __m256 vg = _mm256_loadu_ps(gy + i);
        __m256 mask = _mm256_cmp_ps(vx, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(gx + i, _mm256_and_ps(vg, mask));
    }
    for (; i < n; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

void colsum(const float* g, float* out, std::size_t rows, std::size_t cols) {
    const std::size_t c4 = cols & ~std::size_t(3);
    std::size_t j = 0;
    for (; j < c4; j += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < rows; ++i) {
            acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm_loadu_ps(g + i * cols + j)));
        }
        _mm_storeu_ps(out + j, _mm256_cvtpd_ps(acc));
    }
    for (; j < cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rows; ++i) acc += static_cast<double>(g[i * cols + j]);
        out[j] = static_cast<float>(acc);
    }
}

void adamw_update(float* p, const float* g, float* m, float* v, std::size_t n,
                  double lr, double b1, double b2, double eps, double wd,
                  double bc1, double bc2) {
    const double omb1 = 1.0 - b1;
    const double omb2 = 1.0 - b2;
    const __m256d vb1 = _mm256_set1_pd(b1);
    const __m256d vb2 = _mm256_set1_pd(b2);
    const __m256d vomb1 = _mm256_set1_pd(omb1);
    const __m256d vomb2 = _mm256_set1_pd(omb2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlrwd = _mm256_set1_pd(lr * wd);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        __m256d gi = _mm256_cvtps_pd(_mm_loadu_ps(g + i));
        __m256d mi = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_cvtps_pd(_mm_loadu_ps(m + i))),
                                   _mm256_mul_pd(vomb1, gi));
        __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_cvtps_pd(_mm_loadu_ps(v + i))),
                                   _mm256_mul_pd(vomb2, _mm256_mul_pd(gi, gi)));
        _mm_storeu_ps(m + i, _mm256_cvtpd_ps(mi));
        _mm_storeu_ps(v + i, _mm256_cvtpd_ps(vi));
        __m256d mhat = _mm256_div_pd(mi, vbc1);
        __m256d vhat = _mm256_div_pd(vi, vbc2);
        __m256d pi = _mm256_cvtps_pd(_mm_loadu_ps(p + i));
        __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mhat),
                                    _mm256_add_pd(_mm256_sqrt_pd(vhat), veps));
        __m256d decay = _mm256_mul_pd(vlrwd, pi);
        __m256d res = _mm256_sub_pd(_mm256_sub_pd(pi, decay), upd);
        _mm_storeu_ps(p + i, _mm256_cvtpd_ps(res));
    }
    for (; i < n; ++i) {
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

}  // namespace embedalign::kern::avx2

#endif  // EMBEDALIGN_HAVE_AVX2_BUILD
