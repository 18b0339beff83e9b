#include "calign/lattice_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/core.h>

#include "calign/kernels/kernels.hpp"

namespace calign {

void CodecConfig::validate() const {
    if (q < 2) throw ConfigError(fmt::format("codec: q must be at least 2, got {}", q));
    for (std::int32_t d = 2; d * d <= q; ++d) {
        if (q % d == 0) throw ConfigError(fmt::format("codec: q = {} is not prime", q));
    }
    if (n == 0 || n % 2 != 0) throw ConfigError(fmt::format("codec: n must be positive and even, got {}", n));
    if (!(P > 0.0)) throw ConfigError(fmt::format("codec: power must be positive, got {}", P));
}

double CodecConfig::gamma_s() const { return std::sqrt(6.0 * P); }

void SubchannelModel::validate() const {
    if (!(beta > 0.0)) throw ConfigError(fmt::format("subchannel: beta must be positive, got {}", beta));
    if (std::all_of(a.begin(), a.end(), [](long long v) { return v == 0; })) {
        throw ConfigError("subchannel: at least one coefficient must be nonzero");
    }
}

Dither draw_dither(const CodecConfig& config, std::uint64_t transmitter, std::uint64_t block) {
    CounterRng rng(stream_key(config.seed, StreamTag::dither, transmitter, block));
    const double g = config.gamma_s();
    Dither d(config.n);
    for (auto& x : d) x = (rng.uniform() - 0.5) * g;
    return d;
}

std::vector<cplx> encode(const Message& w, const Dither& dither, const CodecConfig& config) {
    config.validate();
    if (w.size() != config.n || dither.size() != config.n) {
        throw ConfigError(fmt::format("encode: message/dither length must be n = {}", config.n));
    }
    std::vector<cplx> x(config.complex_length());
    kernels::active().lattice_encode(w.data(), dither.data(), reinterpret_cast<double*>(x.data()),
                                     config.n, config.step(), config.gamma_s());
    return x;
}

std::vector<cplx> reduce_mod_coarse(const std::vector<cplx>& x, const CodecConfig& config) {
    const double g = config.gamma_s();
    std::vector<cplx> out(x.size());
    auto red = [g](double v) { return v - g * std::floor(v / g + 0.5); };
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = {red(x[i].real()), red(x[i].imag())};
    return out;
}

Message decode_equation(const std::vector<cplx>& received, const SubchannelModel& model,
                        const std::vector<Dither>& dithers, const CodecConfig& config) {
    config.validate();
    model.validate();
    if (received.size() != config.complex_length()) {
        throw ConfigError(fmt::format("decode_equation: expected {} complex symbols", config.complex_length()));
    }
    if (dithers.size() < model.a.size()) throw ConfigError("decode_equation: one dither per transmitter");
    std::vector<double> y(config.n);
    const double* r = reinterpret_cast<const double*>(received.data());
    for (std::size_t i = 0; i < config.n; ++i) y[i] = r[i] / model.beta;
    for (std::size_t k = 0; k < model.a.size(); ++k) {
        if (model.a[k] == 0) continue;
        const double ak = static_cast<double>(model.a[k]);
        for (std::size_t i = 0; i < config.n; ++i) y[i] -= ak * dithers[k][i];
    }
    Message u(config.n);
    kernels::active().lattice_decode(y.data(), u.data(), config.n, config.q / config.gamma_s(), config.q);
    return u;
}

double computation_rate(const SubchannelModel& model, double P) {
    if (!(P > 0.0)) throw DomainError(fmt::format("computation_rate: P = {} must be positive", P));
    const double sinr = model.beta * model.beta * P / (1.0 + model.sigma2 + model.K * model.gamma2 * P);
    return std::max(0.0, model.K * std::log2(sinr));
}

double awgn_symbol_error_oracle(double sinr, std::int32_t q) {
    if (!(sinr > 0.0)) throw DomainError("awgn_symbol_error_oracle: SINR must be positive");
    // Noise in fine-lattice units: N(0, s^2) with s = q / sqrt(12 SINR). A coordinate is
    // correct when it lands within 1/2 of a multiple of q.
    const double s = q / std::sqrt(12.0 * sinr);
    const double norm = 1.0 / (s * std::sqrt(2.0 * std::numbers::pi));
    auto pdf = [&](double u) { return norm * std::exp(-0.5 * (u / s) * (u / s)); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double error = 0.0;
    for (long j = 0;; ++j) {
        const double lo = j * static_cast<double>(q) + 0.5;
        const double hi = (j + 1) * static_cast<double>(q) - 0.5;
        const double gap = GK::integrate(pdf, lo, hi, 15, 1e-13);
        error += 2.0 * gap;
        if (lo > 40.0 * s) break;
    }
    return std::min(1.0, error);
}

std::vector<CodecSweepRow> codec_sweep(const std::vector<double>& sinr_db, std::int32_t q,
                                       std::size_t n, std::size_t blocks, std::uint64_t seed) {
    std::vector<CodecSweepRow> rows;
    for (double db : sinr_db) {
        CodecConfig cfg;
        cfg.q = q;
        cfg.n = n;
        cfg.P = std::pow(10.0, db / 10.0);
        cfg.seed = seed;
        cfg.validate();
        SubchannelModel model;
        model.a = {1, 1};
        model.K = 2;
        std::size_t wrong = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            std::vector<Message> w(2, Message(n));
            std::vector<Dither> d;
            for (std::uint64_t k = 0; k < 2; ++k) {
                CounterRng mrng(stream_key(seed, StreamTag::messages, k, b));
                for (auto& x : w[k]) x = static_cast<std::int32_t>(mrng.below(q));
                d.push_back(draw_dither(cfg, k, b));
            }
            CounterRng nrng(stream_key(seed, StreamTag::noise, b));
            const auto x1 = encode(w[0], d[0], cfg);
            const auto x2 = encode(w[1], d[1], cfg);
            std::vector<cplx> r(cfg.complex_length());
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = x1[i] + x2[i] + nrng.complex_normal();
            const Message u = decode_equation(r, model, d, cfg);
            for (std::size_t i = 0; i < n; ++i) wrong += u[i] != (w[0][i] + w[1][i]) % q;
        }
        CodecSweepRow row;
        row.sinr_db = db;
        row.q = q;
        row.n = n;
        row.error_rate = static_cast<double>(wrong) / static_cast<double>(blocks * n);
        row.oracle = awgn_symbol_error_oracle(cfg.P, q);
        row.rate_bound = computation_rate(model, cfg.P);
        row.codec_rate = 2.0 * model.K * std::log2(static_cast<double>(q));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace calign
