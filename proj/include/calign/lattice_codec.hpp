#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "calign/rng.hpp"
#include "calign/types.hpp"

namespace calign {

/// Hypercube nested lattice code: fine lattice (gamma_s/q) Z^n inside coarse lattice
/// gamma_s Z^n with gamma_s = sqrt(6P), so a uniformly dithered codeword has power P
/// per complex symbol. One message symbol in Z_q per real dimension (kappa = n).
struct CodecConfig {
    std::int32_t q = 2;
    std::size_t n = 2;   ///< real dimensions per block, even
    double P = 1.0;      ///< power per complex symbol
    std::uint64_t seed = 0;

    void validate() const;
    double gamma_s() const;
    double step() const { return gamma_s() / q; }
    std::size_t kappa() const { return n; }
    std::size_t complex_length() const { return n / 2; }
};

struct SubchannelModel {
    double beta = 1.0;
    std::vector<long long> a;  ///< integer coefficients per transmitter
    double gamma2 = 0.0;
    double sigma2 = 0.0;
    int K = 2;

    void validate() const;
};

using Message = std::vector<std::int32_t>;
using Dither = std::vector<double>;

/// Uniform dither over [-gamma_s/2, gamma_s/2)^n, stream (transmitter, block).
Dither draw_dither(const CodecConfig& config, std::uint64_t transmitter, std::uint64_t block);

/// x = (w gamma_s/q + d) mod gamma_s Z^n, packed as n/2 complex symbols (re, im).
std::vector<cplx> encode(const Message& w, const Dither& dither, const CodecConfig& config);

/// Reduces every coordinate into [-gamma_s/2, gamma_s/2).
std::vector<cplx> reduce_mod_coarse(const std::vector<cplx>& x, const CodecConfig& config);

/// u = sum a_k w_k mod q estimated from r: y = r/beta - sum a_k d_k, nearest fine point,
/// then mod q. dithers[k] is ignored where a_k = 0.
Message decode_equation(const std::vector<cplx>& received, const SubchannelModel& model,
                        const std::vector<Dither>& dithers, const CodecConfig& config);

/// K log2(beta^2 P / (1 + sigma^2 + K gamma^2 P)), clamped at 0.
double computation_rate(const SubchannelModel& model, double P);

/// Probability that one real coordinate decodes wrongly over AWGN with CN(0,1) noise at
/// the given SINR = beta^2 P: the Gaussian mass outside the wrapped decision intervals
/// [j gamma_s - step/2, j gamma_s + step/2), integrated numerically.
double awgn_symbol_error_oracle(double sinr, std::int32_t q);

struct CodecSweepRow {
    double sinr_db = 0.0;
    std::int32_t q = 0;
    std::size_t n = 0;
    double error_rate = 0.0;   ///< fraction of wrong Z_q symbols
    double oracle = 0.0;       ///< awgn_symbol_error_oracle
    double rate_bound = 0.0;   ///< computation_rate at this SINR
    double codec_rate = 0.0;   ///< 2 K log2(q) bits per complex use
};

/// AWGN-only sweep over a two-transmitter sum channel a = (1,1), beta = 1, SINR = P.
/// Noise, messages and dithers are common across SINR points.
std::vector<CodecSweepRow> codec_sweep(const std::vector<double>& sinr_db, std::int32_t q,
                                       std::size_t n, std::size_t blocks, std::uint64_t seed);

}  // namespace calign
