#include "fn_table.hpp"

#include <immintrin.h>

#include <cmath>

// AVX2+FMA variants. Compiled with -mavx2 -mfma in its own translation unit;
// only reached through the dispatch table after a CPUID check.

namespace vsynth::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    double result = hsum(acc0);
    for (; i < n; ++i) result += a[i] * b[i];
    return result;
}

void matvec_bias_avx2(const double* w, const double* x, const double* b,
                      double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        y[i] = dot_avx2(w + i * cols, x, cols) + b[i];
    }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        __m256d y1 = _mm256_loadu_pd(y + i + 4);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
        _mm256_storeu_pd(y + i, y0);
        _mm256_storeu_pd(y + i + 4, y1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d y0 = _mm256_loadu_pd(y + i);
        y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
        _mm256_storeu_pd(y + i, y0);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void matvec_t_accum_avx2(const double* w, const double* d, double* y,
                         std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        axpy_avx2(d[i], w + i * cols, y, cols);
    }
}

void ger_accum_avx2(double* g, const double* d, const double* x,
                    std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        axpy_avx2(d[i], x, g + i * cols, cols);
    }
}

void scale_avx2(double* x, double a, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    }
    for (; i < n; ++i) x[i] *= a;
}

void leaky_relu_avx2(const double* pre, double* out, std::size_t n,
                     double slope) {
    const __m256d vslope = _mm256_set1_pd(slope);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(pre + i);
        const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        const __m256d neg = _mm256_mul_pd(v, vslope);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(neg, v, mask));
    }
    for (; i < n; ++i) out[i] = pre[i] > 0.0 ? pre[i] : slope * pre[i];
}

void leaky_relu_grad_avx2(const double* pre, const double* upstream,
                          double* out, std::size_t n, double slope) {
    const __m256d vslope = _mm256_set1_pd(slope);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(pre + i);
        const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        const __m256d factor = _mm256_blendv_pd(vslope, one, mask);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(upstream + i), factor));
    }
    for (; i < n; ++i) out[i] = upstream[i] * (pre[i] > 0.0 ? 1.0 : slope);
}

void adam_update_avx2(double* p, double* m, double* v, const double* grad,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_fmadd_pd(vomb1, g, _mm256_mul_pd(vb1, mi));
        vi = _mm256_fmadd_pd(vomb2, _mm256_mul_pd(g, g), _mm256_mul_pd(vb2, vi));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_mul_pd(mi, vbc1);
        const __m256d vhat = _mm256_mul_pd(vi, vbc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        const double gi = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        p[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

} // namespace

const FnTable kAvx2Table = {
    matvec_bias_avx2,  matvec_t_accum_avx2, ger_accum_avx2,
    dot_avx2,          axpy_avx2,           scale_avx2,
    leaky_relu_avx2,   leaky_relu_grad_avx2, adam_update_avx2,
};

} // namespace vsynth::kernels
