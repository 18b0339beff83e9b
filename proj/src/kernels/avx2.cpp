#include <immintrin.h>

#include <cmath>

#include "calign/kernels/kernels.hpp"

namespace calign::kernels {
namespace {

// Lane operations mirror the scalar reference one-for-one (separate mul and add,
// no FMA) so that encode, decode and caxpy agree bit for bit.

void encode(const std::int32_t* w, const double* dither, double* out, std::size_t n, double step,
            double g) {
    const __m256d vstep = _mm256_set1_pd(step);
    const __m256d vg = _mm256_set1_pd(g);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d wd = _mm256_cvtepi32_pd(_mm_loadu_si128(reinterpret_cast<const __m128i*>(w + i)));
        const __m256d x = _mm256_add_pd(_mm256_mul_pd(wd, vstep), _mm256_loadu_pd(dither + i));
        const __m256d f = _mm256_floor_pd(_mm256_add_pd(_mm256_div_pd(x, vg), half));
        _mm256_storeu_pd(out + i, _mm256_sub_pd(x, _mm256_mul_pd(vg, f)));
    }
    for (; i < n; ++i) {
        const double x = static_cast<double>(w[i]) * step + dither[i];
        out[i] = x - g * std::floor(x / g + 0.5);
    }
}

void decode(const double* y, std::int32_t* out, std::size_t n, double scale, std::int32_t q) {
    const double qd = q;
    const __m256d vs = _mm256_set1_pd(scale);
    const __m256d vq = _mm256_set1_pd(qd);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(y + i), vs), half));
        const __m256d m = _mm256_sub_pd(r, _mm256_mul_pd(vq, _mm256_floor_pd(_mm256_div_pd(r, vq))));
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), _mm256_cvtpd_epi32(m));
    }
    for (; i < n; ++i) {
        const double r = std::floor(y[i] * scale + 0.5);
        out[i] = static_cast<std::int32_t>(r - qd * std::floor(r / qd));
    }
}

cplx cdot(const cplx* a, const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    __m256d acc_re = _mm256_setzero_pd();  // lanes: ar*br, ai*bi
    __m256d acc_im = _mm256_setzero_pd();  // lanes: ar*bi, ai*br
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(pa + 2 * i);
        const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        acc_re = _mm256_add_pd(acc_re, _mm256_mul_pd(va, vb));
        acc_im = _mm256_add_pd(acc_im, _mm256_mul_pd(va, _mm256_permute_pd(vb, 0b0101)));
    }
    alignas(32) double re[4], im[4];
    _mm256_store_pd(re, acc_re);
    _mm256_store_pd(im, acc_im);
    double sr = (re[0] + re[1]) + (re[2] + re[3]);
    double si = (im[0] - im[1]) + (im[2] - im[3]);
    for (; i < n; ++i) {
        sr += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        si += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    }
    return {sr, si};
}

double sum_abs2(const cplx* a, std::size_t n) {
    const double* p = reinterpret_cast<const double*>(a);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v = _mm256_loadu_pd(p + 2 * i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
    }
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    double total = (s[0] + s[1]) + (s[2] + s[3]);
    for (; i < n; ++i) total += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    return total;
}

void caxpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const __m256d ar = _mm256_set1_pd(alpha.real());
    const __m256d ai = _mm256_set1_pd(alpha.imag());
    const double* px = reinterpret_cast<const double*>(x);
    double* py = reinterpret_cast<double*>(y);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vx = _mm256_loadu_pd(px + 2 * i);
        const __m256d t1 = _mm256_mul_pd(ar, vx);                               // ar*xr, ar*xi
        const __m256d t2 = _mm256_mul_pd(ai, _mm256_permute_pd(vx, 0b0101));    // ai*xi, ai*xr
        const __m256d prod = _mm256_addsub_pd(t1, t2);
        _mm256_storeu_pd(py + 2 * i, _mm256_add_pd(_mm256_loadu_pd(py + 2 * i), prod));
    }
    const double sr = alpha.real(), si = alpha.imag();
    for (; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] = {y[i].real() + (sr * xr - si * xi), y[i].imag() + (sr * xi + si * xr)};
    }
}

constexpr KernelTable kAvx2{"avx2", encode, decode, cdot, sum_abs2, caxpy};

}  // namespace

const KernelTable* avx2_table_impl() { return &kAvx2; }

}  // namespace calign::kernels
