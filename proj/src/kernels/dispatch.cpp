#include "vesselsynth/kernels.hpp"

#include "fn_table.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace vsynth::kernels {
namespace {

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const FnTable* table_for(Level level) {
    switch (level) {
        case Level::scalar:
            return &kScalarTable;
        case Level::avx2:
#ifdef VSYNTH_HAVE_AVX2
            return &kAvx2Table;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

struct Dispatch {
    Level level = Level::scalar;
    const FnTable* table = &kScalarTable;

    Dispatch() {
        Level wanted = Level::scalar;
        if (const char* env = std::getenv("VESSELSYNTH_KERNELS")) {
            if (std::strcmp(env, "scalar") == 0) {
                wanted = Level::scalar;
            } else if (std::strcmp(env, "avx2") == 0) {
                wanted = Level::avx2;
            } else {
                throw std::invalid_argument(
                    std::string("VESSELSYNTH_KERNELS: unknown level '") + env + "'");
            }
            if (!level_available(wanted)) {
                throw std::invalid_argument(
                    std::string("VESSELSYNTH_KERNELS: level '") + env +
                    "' not available on this machine");
            }
        } else if (level_available(Level::avx2)) {
            wanted = Level::avx2;
        }
        level = wanted;
        table = table_for(wanted);
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

} // namespace

const char* level_name(Level level) {
    switch (level) {
        case Level::scalar: return "scalar";
        case Level::avx2: return "avx2";
    }
    return "?";
}

bool level_available(Level level) {
    if (table_for(level) == nullptr) return false;
    if (level == Level::avx2 && !cpu_supports_avx2()) return false;
    return true;
}

Level active_level() { return dispatch().level; }

void set_level(Level level) {
    if (!level_available(level)) {
        throw std::invalid_argument(std::string("kernel level '") +
                                    level_name(level) +
                                    "' not available on this machine");
    }
    dispatch().level = level;
    dispatch().table = table_for(level);
}

void matvec_bias(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
    dispatch().table->matvec_bias(w, x, b, y, rows, cols);
}

void matvec_t_accum(const double* w, const double* d, double* y,
                    std::size_t rows, std::size_t cols) {
    dispatch().table->matvec_t_accum(w, d, y, rows, cols);
}

void ger_accum(double* g, const double* d, const double* x, std::size_t rows,
               std::size_t cols) {
    dispatch().table->ger_accum(g, d, x, rows, cols);
}

double dot(const double* a, const double* b, std::size_t n) {
    return dispatch().table->dot(a, b, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    dispatch().table->axpy(a, x, y, n);
}

void scale(double* x, double a, std::size_t n) {
    dispatch().table->scale(x, a, n);
}

void leaky_relu(const double* pre, double* out, std::size_t n, double slope) {
    dispatch().table->leaky_relu(pre, out, n, slope);
}

void leaky_relu_grad(const double* pre, const double* upstream, double* out,
                     std::size_t n, double slope) {
    dispatch().table->leaky_relu_grad(pre, upstream, out, n, slope);
}

void adam_update(double* p, double* m, double* v, const double* grad,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
    dispatch().table->adam_update(p, m, v, grad, n, lr, beta1, beta2, eps, bc1,
                                  bc2);
}

} // namespace vsynth::kernels
