#pragma once

#include <cstddef>

namespace vsynth::kernels {

struct FnTable {
    void (*matvec_bias)(const double*, const double*, const double*, double*,
                        std::size_t, std::size_t);
    void (*matvec_t_accum)(const double*, const double*, double*, std::size_t,
                           std::size_t);
    void (*ger_accum)(double*, const double*, const double*, std::size_t,
                      std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
    void (*leaky_relu)(const double*, double*, std::size_t, double);
    void (*leaky_relu_grad)(const double*, const double*, double*, std::size_t,
                            double);
    void (*adam_update)(double*, double*, double*, const double*, std::size_t,
                        double, double, double, double, double, double);
};

extern const FnTable kScalarTable;
#ifdef VSYNTH_HAVE_AVX2
extern const FnTable kAvx2Table;
#endif

} // namespace vsynth::kernels
