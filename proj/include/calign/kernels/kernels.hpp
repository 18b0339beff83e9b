#pragma once

#include <cstddef>
#include <cstdint>

#include "calign/types.hpp"

namespace calign::kernels {

/// Inner loops with scalar reference and vector variants. Lattice encode/decode
/// and caxpy are bit-exact across variants; reductions may differ by rounding.
struct KernelTable {
    const char* name;

    /// out[i] = x - g*floor(x/g + 1/2) with x = w[i]*step + dither[i].
    void (*lattice_encode)(const std::int32_t* w, const double* dither, double* out,
                           std::size_t n, double step, double g);
    /// out[i] = floor(y[i]*scale + 1/2) mod q, in [0, q).
    void (*lattice_decode)(const double* y, std::int32_t* out, std::size_t n, double scale,
                           std::int32_t q);
    /// sum_i conj(a[i]) * b[i]
    cplx (*cdot)(const cplx* a, const cplx* b, std::size_t n);
    /// sum_i |a[i]|^2
    double (*sum_abs2)(const cplx* a, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*caxpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// Table chosen once at first use: AVX2 when supported, unless the environment
/// variable CALIGN_SIMD is set to "scalar". CALIGN_SIMD=avx2 on a machine without
/// AVX2 falls back to scalar.
const KernelTable& active();

}  // namespace calign::kernels
