#pragma once

#include <cstddef>

// Numeric inner-loop kernels. Every kernel has a scalar reference
// implementation plus vectorized variants (AVX2 on x86-64, NEON on arm64)
// selected once at startup; tests assert scalar/vector equivalence.
// Dispatch can be forced with the KRLAB_SIMD env var: auto|scalar|avx2|neon.

namespace krlab::simd {

struct Kernels {
    // sum(a[i] * b[i])
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum((a[i] - b[i])^2)
    double (*l2sq_diff)(const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y += W x for row-major W (m x n)
    void (*matvec_acc)(const double* W, const double* x, double* y, std::size_t m, std::size_t n);
    // dx += W^T dy for row-major W (m x n)
    void (*matvec_t_acc)(const double* W, const double* dy, double* dx, std::size_t m, std::size_t n);
    // W += dy x^T (rank-1 update of row-major W, m x n)
    void (*ger_acc)(double* W, const double* dy, const double* x, std::size_t m, std::size_t n);
    // Box distance terms for a point p against box (c, o):
    //   outside = sum(max(0, |p-c| - o)), inside = sum(min(|p-c|, o))
    void (*box_dist_terms)(const double* p, const double* c, const double* o, std::size_t n,
                           double* outside, double* inside);
    const char* name;
};

extern const Kernels kScalar;
#if defined(__x86_64__) || defined(_M_X64)
extern const Kernels kAvx2;
#endif
#if defined(__aarch64__)
extern const Kernels kNeon;
#endif

// Active kernel table; resolved once, stable for the process lifetime.
const Kernels& active();
const char* active_name();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double l2sq_diff(const double* a, const double* b, std::size_t n) {
    return active().l2sq_diff(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void matvec_acc(const double* W, const double* x, double* y, std::size_t m, std::size_t n) {
    active().matvec_acc(W, x, y, m, n);
}
inline void matvec_t_acc(const double* W, const double* dy, double* dx, std::size_t m,
                         std::size_t n) {
    active().matvec_t_acc(W, dy, dx, m, n);
}
inline void ger_acc(double* W, const double* dy, const double* x, std::size_t m, std::size_t n) {
    active().ger_acc(W, dy, x, m, n);
}
inline void box_dist_terms(const double* p, const double* c, const double* o, std::size_t n,
                           double* outside, double* inside) {
    active().box_dist_terms(p, c, o, n, outside, inside);
}

}  // namespace krlab::simd
