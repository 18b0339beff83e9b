#include "calign/fading.hpp"

#include <cmath>

#include <fmt/core.h>

#include "calign/rng.hpp"

namespace calign {

void FadingConfig::validate() const {
    if (T == 0) throw ConfigError("fading: blocklength T must be at least 1");
    if (K < 2) throw ConfigError(fmt::format("fading: K must be at least 2, got {}", K));
    if (kind == ProcessKind::ar1 && !(correlation >= 0.0 && correlation < 1.0)) {
        throw ConfigError(fmt::format("fading: AR(1) correlation {} outside [0, 1)", correlation));
    }
}

GainSequence::GainSequence(FadingConfig config, std::vector<cplx> gains)
    : config_(config), gains_(std::move(gains)) {
    if (gains_.size() != config_.T * static_cast<std::size_t>(config_.K * config_.K)) {
        throw ConfigError(fmt::format("GainSequence: expected {} gains, got {}",
                                      config_.T * config_.K * config_.K, gains_.size()));
    }
}

GainSequence generate_process(const FadingConfig& config) {
    config.validate();
    const int K = config.K;
    std::vector<cplx> gains(config.T * K * K);
    const double rho = config.kind == ProcessKind::ar1 ? config.correlation : 0.0;
    const double innovation = std::sqrt(1.0 - rho * rho);

    for (int m = 0; m < K; ++m) {
        for (int k = 0; k < K; ++k) {
            CounterRng rng(stream_key(config.seed, StreamTag::fading,
                                      static_cast<std::uint64_t>(config.layer),
                                      static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k)));
            cplx prev = rng.complex_normal();
            gains[(0 * K + m) * K + k] = prev;
            for (std::size_t t = 1; t < config.T; ++t) {
                const cplx g = rng.complex_normal();
                prev = config.kind == ProcessKind::ar1 ? rho * prev + innovation * g : g;
                gains[(t * K + m) * K + k] = prev;
            }
        }
    }
    return GainSequence(config, std::move(gains));
}

std::vector<cplx> generate_noise(std::uint64_t seed, std::size_t T, int K, int layer) {
    if (T == 0 || K < 1) {
        throw ConfigError(fmt::format("generate_noise: invalid dimensions T={} K={}", T, K));
    }
    std::vector<cplx> noise(T * K);
    for (int m = 0; m < K; ++m) {
        CounterRng rng(stream_key(seed, StreamTag::noise, static_cast<std::uint64_t>(layer),
                                  static_cast<std::uint64_t>(m)));
        for (std::size_t t = 0; t < T; ++t) noise[t * K + m] = rng.complex_normal();
    }
    return noise;
}

}  // namespace calign
