#include <cmath>

#include "calign/kernels/kernels.hpp"

namespace calign::kernels {
namespace {

void encode(const std::int32_t* w, const double* dither, double* out, std::size_t n, double step,
            double g) {
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(w[i]) * step + dither[i];
        out[i] = x - g * std::floor(x / g + 0.5);
    }
}

void decode(const double* y, std::int32_t* out, std::size_t n, double scale, std::int32_t q) {
    const double qd = q;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::floor(y[i] * scale + 0.5);
        out[i] = static_cast<std::int32_t>(r - qd * std::floor(r / qd));
    }
}

cplx cdot(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    }
    return {re, im};
}

double sum_abs2(const cplx* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    return s;
}

void caxpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const double ar = alpha.real(), ai = alpha.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] = {y[i].real() + (ar * xr - ai * xi), y[i].imag() + (ar * xi + ai * xr)};
    }
}

constexpr KernelTable kScalar{"scalar", encode, decode, cdot, sum_abs2, caxpy};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace calign::kernels
