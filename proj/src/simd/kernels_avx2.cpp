#include "krlab/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

// Compiled with -mavx2 -mfma; the dispatcher only installs this table after a
// runtime CPU check, so no AVX2 instruction executes on unsupported hardware.

namespace krlab::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l2sq_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_acc_avx2(const double* W, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) y[i] += dot_avx2(W + i * n, x, n);
}

void matvec_t_acc_avx2(const double* W, const double* dy, double* dx, std::size_t m,
                       std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_avx2(dy[i], W + i * n, dx, n);
}

void ger_acc_avx2(double* W, const double* dy, const double* x, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_avx2(dy[i], x, W + i * n, n);
}

void box_terms_avx2(const double* p, const double* c, const double* o, std::size_t n,
                    double* outside, double* inside) {
    __m256d acc_out = _mm256_setzero_pd();
    __m256d acc_in = _mm256_setzero_pd();
    __m256d zero = _mm256_setzero_pd();
    __m256d signmask = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_loadu_pd(c + i));
        __m256d a = _mm256_andnot_pd(signmask, d);  // |p - c|
        __m256d vo = _mm256_loadu_pd(o + i);
        acc_out = _mm256_add_pd(acc_out, _mm256_max_pd(zero, _mm256_sub_pd(a, vo)));
        acc_in = _mm256_add_pd(acc_in, _mm256_min_pd(a, vo));
    }
    double out = hsum(acc_out), in = hsum(acc_in);
    for (; i < n; ++i) {
        double a = std::fabs(p[i] - c[i]);
        out += std::max(0.0, a - o[i]);
        in += std::min(a, o[i]);
    }
    *outside = out;
    *inside = in;
}

}  // namespace

const Kernels kAvx2 = {dot_avx2,      l2sq_avx2,    axpy_avx2,      matvec_acc_avx2,
                       matvec_t_acc_avx2, ger_acc_avx2, box_terms_avx2, "avx2"};

}  // namespace krlab::simd

#endif
