#include "krlab/simd/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

// NEON is baseline on arm64, so this table needs no runtime feature check.

namespace krlab::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l2sq_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_acc_neon(const double* W, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) y[i] += dot_neon(W + i * n, x, n);
}

void matvec_t_acc_neon(const double* W, const double* dy, double* dx, std::size_t m,
                       std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_neon(dy[i], W + i * n, dx, n);
}

void ger_acc_neon(double* W, const double* dy, const double* x, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_neon(dy[i], x, W + i * n, n);
}

void box_terms_neon(const double* p, const double* c, const double* o, std::size_t n,
                    double* outside, double* inside) {
    float64x2_t acc_out = vdupq_n_f64(0.0);
    float64x2_t acc_in = vdupq_n_f64(0.0);
    float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t a = vabsq_f64(vsubq_f64(vld1q_f64(p + i), vld1q_f64(c + i)));
        float64x2_t vo = vld1q_f64(o + i);
        acc_out = vaddq_f64(acc_out, vmaxq_f64(zero, vsubq_f64(a, vo)));
        acc_in = vaddq_f64(acc_in, vminq_f64(a, vo));
    }
    double out = vaddvq_f64(acc_out), in = vaddvq_f64(acc_in);
    for (; i < n; ++i) {
        double a = std::fabs(p[i] - c[i]);
        out += std::max(0.0, a - o[i]);
        in += std::min(a, o[i]);
    }
    *outside = out;
    *inside = in;
}

}  // namespace

const Kernels kNeon = {dot_neon,      l2sq_neon,    axpy_neon,      matvec_acc_neon,
                       matvec_t_acc_neon, ger_acc_neon, box_terms_neon, "neon"};

}  // namespace krlab::simd

#endif
