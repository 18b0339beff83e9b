#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "calign/types.hpp"

namespace calign {

enum class ProcessKind { iid, ar1 };

/// Parameters of one layer's fading process.
struct FadingConfig {
    int K = 2;
    std::size_t T = 1;
    ProcessKind kind = ProcessKind::iid;
    double correlation = 0.0;  ///< AR(1) lag-one correlation, ignored for iid
    std::uint64_t seed = 0;
    int layer = 0;

    /// Throws ConfigError when T = 0, K < 2, or the AR(1) correlation is outside [0, 1).
    void validate() const;
};

/// T x K x K array of channel gains h_{m,k}[t], stored with t slowest and k fastest.
/// Indices m (receiver) and k (transmitter) are zero-based.
class GainSequence {
public:
    GainSequence(FadingConfig config, std::vector<cplx> gains);

    const FadingConfig& config() const { return config_; }
    int K() const { return config_.K; }
    std::size_t T() const { return config_.T; }

    const cplx& at(std::size_t t, int m, int k) const {
        return gains_[(t * config_.K + m) * config_.K + k];
    }
    cplx& at(std::size_t t, int m, int k) { return gains_[(t * config_.K + m) * config_.K + k]; }

    /// The K*K gains of slot t, row-major in (m, k).
    std::span<const cplx> slot(std::size_t t) const {
        return {gains_.data() + t * config_.K * config_.K,
                static_cast<std::size_t>(config_.K * config_.K)};
    }
    std::span<const cplx> raw() const { return gains_; }

private:
    FadingConfig config_;
    std::vector<cplx> gains_;
};

/// Draws the K^2 independent unit-variance Rayleigh processes. Each (layer, m, k)
/// process has its own counter-based stream derived from the seed.
GainSequence generate_process(const FadingConfig& config);

/// T x K i.i.d. CN(0,1) receiver noise, index t*K + m; one stream per (layer, m).
std::vector<cplx> generate_noise(std::uint64_t seed, std::size_t T, int K, int layer = 0);

}  // namespace calign
