#pragma once

#include <cstddef>

// Dense numeric kernels behind the neural layers. Every operation has a
// scalar reference implementation and, on x86-64 builds, an AVX2+FMA variant.
// The active variant is picked once at startup from CPUID, overridable with
// the VESSELSYNTH_KERNELS environment variable ("scalar" or "avx2") and
// set_level(). Variants are equivalence-tested against the scalar reference;
// they may differ in the last bits because of FMA and reassociation.

namespace vsynth::kernels {

enum class Level { scalar = 0, avx2 = 1 };

const char* level_name(Level level);
bool level_available(Level level);

/// The variant currently in use.
Level active_level();

/// Force a variant (mainly for equivalence tests). Throws std::invalid_argument
/// if the variant was not compiled in or the CPU lacks the instructions.
void set_level(Level level);

/// y = W x + b. W is row-major (rows x cols), x has cols entries, y rows.
void matvec_bias(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols);

/// y += W^T d. d has rows entries, y cols.
void matvec_t_accum(const double* w, const double* d, double* y,
                    std::size_t rows, std::size_t cols);

/// G += d x^T (outer product). G row-major (rows x cols).
void ger_accum(double* g, const double* d, const double* x,
               std::size_t rows, std::size_t cols);

double dot(const double* a, const double* b, std::size_t n);

/// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);

void scale(double* x, double a, std::size_t n);

/// out[i] = pre[i] > 0 ? pre[i] : slope * pre[i]
void leaky_relu(const double* pre, double* out, std::size_t n, double slope);

/// out[i] = upstream[i] * (pre[i] > 0 ? 1 : slope)
void leaky_relu_grad(const double* pre, const double* upstream, double* out,
                     std::size_t n, double slope);

/// One Adam update with bias correction folded into bc1 = 1/(1-beta1^t),
/// bc2 = 1/(1-beta2^t):
///   m = beta1 m + (1-beta1) g;  v = beta2 v + (1-beta2) g^2
///   p -= lr * (m * bc1) / (sqrt(v * bc2) + eps)
void adam_update(double* p, double* m, double* v, const double* grad,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2);

} // namespace vsynth::kernels
