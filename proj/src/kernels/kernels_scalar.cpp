#include "fn_table.hpp"

#include <cmath>

// Reference kernels. Plain loops, no intrinsics; the SIMD variants are
// equivalence-tested against these.

namespace vsynth::kernels {
namespace {

void matvec_bias_scalar(const double* w, const double* x, const double* b,
                        double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = w + i * cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] = acc + b[i];
    }
}

void matvec_t_accum_scalar(const double* w, const double* d, double* y,
                           std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = w + i * cols;
        const double di = d[i];
        for (std::size_t j = 0; j < cols; ++j) y[j] += di * row[j];
    }
}

void ger_accum_scalar(double* g, const double* d, const double* x,
                      std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        double* row = g + i * cols;
        const double di = d[i];
        for (std::size_t j = 0; j < cols; ++j) row[j] += di * x[j];
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void leaky_relu_scalar(const double* pre, double* out, std::size_t n,
                       double slope) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = pre[i] > 0.0 ? pre[i] : slope * pre[i];
}

void leaky_relu_grad_scalar(const double* pre, const double* upstream,
                            double* out, std::size_t n, double slope) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = upstream[i] * (pre[i] > 0.0 ? 1.0 : slope);
}

void adam_update_scalar(double* p, double* m, double* v, const double* grad,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        const double mhat = m[i] * bc1;
        const double vhat = v[i] * bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

} // namespace

const FnTable kScalarTable = {
    matvec_bias_scalar,     matvec_t_accum_scalar, ger_accum_scalar,
    dot_scalar,             axpy_scalar,           scale_scalar,
    leaky_relu_scalar,      leaky_relu_grad_scalar, adam_update_scalar,
};

} // namespace vsynth::kernels
