#include <algorithm>
#include <cmath>

#include "krlab/simd/kernels.hpp"

namespace krlab::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l2sq_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_acc_scalar(const double* W, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) y[i] += dot_scalar(W + i * n, x, n);
}

void matvec_t_acc_scalar(const double* W, const double* dy, double* dx, std::size_t m,
                         std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(dy[i], W + i * n, dx, n);
}

void ger_acc_scalar(double* W, const double* dy, const double* x, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(dy[i], x, W + i * n, n);
}

void box_terms_scalar(const double* p, const double* c, const double* o, std::size_t n,
                      double* outside, double* inside) {
    double out = 0.0, in = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = std::fabs(p[i] - c[i]);
        out += std::max(0.0, a - o[i]);
        in += std::min(a, o[i]);
    }
    *outside = out;
    *inside = in;
}

}  // namespace

const Kernels kScalar = {dot_scalar,      l2sq_scalar,    axpy_scalar,      matvec_acc_scalar,
                         matvec_t_acc_scalar, ger_acc_scalar, box_terms_scalar, "scalar"};

}  // namespace krlab::simd
