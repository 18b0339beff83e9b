#pragma once

#include <cstdint>
#include <string>

#include "calign/types.hpp"

namespace calign {

struct QuantizerConfig {
    int nu = 2;  ///< magnitude range and inverse ring spacing
    int L = 1;   ///< angular resolution multiplier

    QuantizerConfig() = default;
    QuantizerConfig(int nu_, int L_);

    void validate() const;
    int rings() const { return nu * nu; }
    int sectors() const { return nu * nu * L; }
    /// Number of finite cells, nu^4 L.
    std::int64_t finite_cells() const { return static_cast<std::int64_t>(rings()) * sectors(); }
    /// Quantization error bound (pi+1)/nu for |h| <= nu.
    double error_bound() const;
};

/// A quantizer cell. ring == 0 denotes the point at infinity; otherwise
/// ring is in 1..nu^2 and sector in 0..nu^2 L - 1.
struct QuantizedGain {
    int ring = 0;
    int sector = 0;

    static constexpr QuantizedGain infinity() { return {0, 0}; }
    static constexpr QuantizedGain cell(int ring, int sector) { return {ring, sector}; }

    bool is_infinity() const { return ring == 0; }
    bool operator==(const QuantizedGain&) const = default;

    /// Dense index: (ring-1)*S + sector for finite cells, nu^4 L for infinity.
    std::int64_t index(const QuantizerConfig& config) const;
    /// "inf" or "ring:sector".
    std::string to_string() const;
};

/// Ring i covers magnitudes [(i-1)/nu, i/nu), with the outermost ring closed at nu;
/// sector s covers angles [s*2pi/S, (s+1)*2pi/S). Magnitudes above nu map to infinity.
QuantizedGain quantize(cplx h, const QuantizerConfig& config);

/// Cell midpoint: magnitude (i-1/2)/nu, angle (s+1/2)*2pi/S. Throws DomainError for infinity.
cplx representative(QuantizedGain cell, const QuantizerConfig& config);

/// Multiplication by omega_L^j, i.e. sector <- (sector + j nu^2) mod S. Infinity is fixed.
QuantizedGain rotate(QuantizedGain cell, long long j, const QuantizerConfig& config);

/// max{|g|, 1/|g|}.
double conditioning(cplx g);

/// True iff max{|h_hat|, 1/|h_hat|} <= 2 max{|h|, 1/|h|}.
/// Throws DomainError when h quantizes to infinity.
bool magnitude_distortion_check(cplx h, const QuantizerConfig& config);

/// Exact probability that a CN(0,1) gain falls in the given cell.
double rayleigh_cell_probability(QuantizedGain cell, const QuantizerConfig& config);

}  // namespace calign
