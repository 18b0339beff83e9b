#include "calign/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

namespace calign {

QuantizerConfig::QuantizerConfig(int nu_, int L_) : nu(nu_), L(L_) { validate(); }

void QuantizerConfig::validate() const {
    if (nu < 2) throw ConfigError(fmt::format("quantizer: nu must be at least 2, got {}", nu));
    if (L < 1) throw ConfigError(fmt::format("quantizer: L must be at least 1, got {}", L));
    // Cell indices must fit comfortably in 64 bits and sectors in int.
    if (static_cast<long long>(nu) * nu * L > (1LL << 30)) {
        throw ConfigError(fmt::format("quantizer: nu^2 L too large (nu={}, L={})", nu, L));
    }
}

double QuantizerConfig::error_bound() const { return (std::numbers::pi + 1.0) / nu; }

std::int64_t QuantizedGain::index(const QuantizerConfig& config) const {
    if (is_infinity()) return config.finite_cells();
    return static_cast<std::int64_t>(ring - 1) * config.sectors() + sector;
}

std::string QuantizedGain::to_string() const {
    if (is_infinity()) return "inf";
    return fmt::format("{}:{}", ring, sector);
}

QuantizedGain quantize(cplx h, const QuantizerConfig& config) {
    const double mag = std::abs(h);
    if (mag > config.nu) return QuantizedGain::infinity();

    const int rings = config.rings();
    const int S = config.sectors();
    int ring = static_cast<int>(std::floor(mag * config.nu)) + 1;
    ring = std::clamp(ring, 1, rings);

    double angle = std::arg(h);
    if (angle < 0.0) angle += 2.0 * std::numbers::pi;
    int sector = static_cast<int>(std::floor(angle * S / (2.0 * std::numbers::pi)));
    // arg can round up to exactly 2*pi for tiny negative imaginary parts.
    sector = std::clamp(sector, 0, S - 1);
    return QuantizedGain::cell(ring, sector);
}

cplx representative(QuantizedGain cell, const QuantizerConfig& config) {
    if (cell.is_infinity()) {
        throw DomainError("representative: the point at infinity has no finite representative");
    }
    if (cell.ring < 1 || cell.ring > config.rings() || cell.sector < 0 ||
        cell.sector >= config.sectors()) {
        throw DomainError(fmt::format("representative: cell {} outside the quantizer grid",
                                      cell.to_string()));
    }
    const double mag = (cell.ring - 0.5) / config.nu;
    const double angle = (cell.sector + 0.5) * 2.0 * std::numbers::pi / config.sectors();
    return std::polar(mag, angle);
}

QuantizedGain rotate(QuantizedGain cell, long long j, const QuantizerConfig& config) {
    if (cell.is_infinity()) return cell;
    const long long S = config.sectors();
    const long long shift = ((j % config.L) + config.L) % config.L * config.rings();
    return QuantizedGain::cell(cell.ring, static_cast<int>((cell.sector + shift) % S));
}

double conditioning(cplx g) {
    const double m = std::abs(g);
    return std::max(m, 1.0 / m);
}

bool magnitude_distortion_check(cplx h, const QuantizerConfig& config) {
    const QuantizedGain cell = quantize(h, config);
    if (cell.is_infinity()) {
        throw DomainError("magnitude_distortion_check: h quantizes to the point at infinity");
    }
    return conditioning(representative(cell, config)) <= 2.0 * conditioning(h);
}

double rayleigh_cell_probability(QuantizedGain cell, const QuantizerConfig& config) {
    const double nu = config.nu;
    if (cell.is_infinity()) return std::exp(-nu * nu);
    const double lo = (cell.ring - 1) / nu;
    const double hi = cell.ring / nu;
    // |h|^2 is Exp(1); -expm1 keeps precision in the innermost ring.
    const double p_ring = std::exp(-lo * lo) * -std::expm1(-(hi * hi - lo * lo));
    return p_ring / config.sectors();
}

}  // namespace calign
