#include "embedalign/kernels.hpp"

#include "embedalign/errors.hpp"

namespace embedalign {

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
#ifdef EMBEDALIGN_HAVE_AVX2_BUILD
            return __builtin_cpu_supports("avx2") != 0;
#else
            return false;
#endif
        case Backend::Neon:
#ifdef EMBEDALIGN_HAVE_NEON_BUILD
            return true;  // baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

Backend detect_backend() {
    if (backend_supported(Backend::Avx2)) return Backend::Avx2;
    if (backend_supported(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

namespace {
Backend g_backend = detect_backend();
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (!backend_supported(b)) {
        throw ParameterError(std::string("backend not supported on this host: ") +
                             backend_name(b));
    }
    g_backend = b;
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

namespace kern {

#ifdef EMBEDALIGN_HAVE_AVX2_BUILD
#define EA_DISPATCH(fn, ...)                              \
    do {                                                  \
        if (g_backend == Backend::Avx2) {                 \
            avx2::fn(__VA_ARGS__);                        \
            return;                                       \
        }                                                 \
        scalar::fn(__VA_ARGS__);                          \
    } while (0)
#elif defined(EMBEDALIGN_HAVE_NEON_BUILD)
#define EA_DISPATCH(fn, ...)                              \
    do {                                                  \
        if (g_backend == Backend::Neon) {                 \
            neon::fn(__VA_ARGS__);                        \
            return;                                       \
        }                                                 \
        scalar::fn(__VA_ARGS__);                          \
    } while (0)
#else
#define EA_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void matmul_nn(const float* a, const float* b, float* c,
               std::size_t m, std::size_t k, std::size_t n) {
    EA_DISPATCH(matmul_nn, a, b, c, m, k, n);
}

void add_bias(float* y, const float* bias, std::size_t rows, std::size_t cols) {
    EA_DISPATCH(add_bias, y, bias, rows, cols);
}

void relu_fwd(const float* x, float* y, std::size_t n) {
    EA_DISPATCH(relu_fwd, x, y, n);
}

void relu_bwd(const float* x, const float* gy, float* gx, std::size_t n) {
    EA_DISPATCH(relu_bwd, x, gy, gx, n);
}

void colsum(const float* g, float* out, std::size_t rows, std::size_t cols) {
    EA_DISPATCH(colsum, g, out, rows, cols);
}

void adamw_update(float* p, const float* g, float* m, float* v, std::size_t n,
                  double lr, double b1, double b2, double eps, double wd,
                  double bc1, double bc2) {
    EA_DISPATCH(adamw_update, p, g, m, v, n, lr, b1, b2, eps, wd, bc1, bc2);
}

#undef EA_DISPATCH

}  // namespace kern
}  // namespace embedalign
