#include "embedalign/kernels.hpp"

#ifdef EMBEDALIGN_HAVE_NEON_BUILD

#include <arm_neon.h>

#include <cmath>

// NEON (aarch64) variants, two double lanes per vector. Same lanewise
// operation sequence as the scalar reference; results are bit-identical.

namespace embedalign::kern::neon {

namespace {
inline float64x2_t load2_pd(const float* p) {
    return vcvt_f64_f32(vld1_f32(p));
}
inline void store2_ps(float* p, float64x2_t v) {
    vst1_f32(p, vcvt_f32_f64(v));
}
}  // namespace

void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (std::size_t j = 0; j < n2; j += 2) {
            float64x2_t acc = vdupq_n_f64(0.0);
            for (std::size_t p = 0; p < k; ++p) {
                float64x2_t va = vdupq_n_f64(static_cast<double>(arow[p]));
                float64x2_t vb = load2_pd(b + p * n + j);
                acc = vaddq_f64(acc, vmulq_f64(va, vb));
            }
            store2_ps(crow + j, acc);
        }
        for (std::size_t j = n2; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += static_cast<double>(arow[p]) * static_cast<double>(b[p * n + j]);
            }
            crow[j] = static_cast<float>(acc);
        }
    }
}

void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols) {
    const std::size_t c4 = cols & ~std::size_t(3);
    for (std::size_t i = 0; i < rows; ++i) {
        float* yrow = y + i * cols;
        std::size_t j = 0;
        for (; j < c4; j += 4) {
            vst1q_f32(yrow + j, vaddq_f32(vld1q_f32(yrow + j), vld1q_f32(bias + j)));
        }
        for (; j < cols; ++j) yrow[j] += bias[j];
    }
}

void relu_fwd(const float* x, float* y, std::size_t n) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        float32x4_t vx = vld1q_f32(x + i);
        uint32x4_t mask = vcgtq_f32(vx, zero);
        vst1q_f32(y + i, vreinterpretq_f32_u32(
                             vandq_u32(vreinterpretq_u32_f32(vx), mask)));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    const std::size_t n4 = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        float32x4_t vx = vld1q_f32(x + i);
        float32x4_t vg = vld1q_f32(gy + i);
        uint32x4_t mask = vcgtq_f32(vx, zero);
        vst1q_f32(gx + i, vreinterpretq_f32_u32(
                              vandq_u32(vreinterpretq_u32_f32(vg), mask)));
    }
    for (; i < n; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

void colsum(const float* g, float* out, std::size_t rows, std::size_t cols) {
    const std::size_t c2 = cols & ~std::size_t(1);
    std::size_t j = 0;
    for (; j < c2; j += 2) {
        float64x2_t acc = vdupq_n_f64(0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            acc = vaddq_f64(acc, load2_pd(g + i * cols + j));
        }
        store2_ps(out + j, acc);
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
    const float64x2_t vb1 = vdupq_n_f64(b1);
    const float64x2_t vb2 = vdupq_n_f64(b2);
    const float64x2_t vomb1 = vdupq_n_f64(omb1);
    const float64x2_t vomb2 = vdupq_n_f64(omb2);
    const float64x2_t vlr = vdupq_n_f64(lr);
    const float64x2_t veps = vdupq_n_f64(eps);
    const float64x2_t vlrwd = vdupq_n_f64(lr * wd);
    const float64x2_t vbc1 = vdupq_n_f64(bc1);
    const float64x2_t vbc2 = vdupq_n_f64(bc2);
    const std::size_t n2 = n & ~std::size_t(1);
    std::size_t i = 0;
    for (; i < n2; i += 2) {
        float64x2_t gi = load2_pd(g + i);
        float64x2_t mi = vaddq_f64(vmulq_f64(vb1, load2_pd(m + i)), vmulq_f64(vomb1, gi));
        float64x2_t vi = vaddq_f64(vmulq_f64(vb2, load2_pd(v + i)),
                                   vmulq_f64(vomb2, vmulq_f64(gi, gi)));
        store2_ps(m + i, mi);
        store2_ps(v + i, vi);
        float64x2_t mhat = vdivq_f64(mi, vbc1);
        float64x2_t vhat = vdivq_f64(vi, vbc2);
        float64x2_t pi = load2_pd(p + i);
        float64x2_t upd =
            vdivq_f64(vmulq_f64(vlr, mhat), vaddq_f64(vsqrtq_f64(vhat), veps));
        float64x2_t decay = vmulq_f64(vlrwd, pi);
        store2_ps(p + i, vsubq_f64(vsubq_f64(pi, decay), upd));
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

}  // namespace embedalign::kern::neon

#endif  // EMBEDALIGN_HAVE_NEON_BUILD
