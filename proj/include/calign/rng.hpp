#pragma once

#include <cstdint>
#include <limits>

#include "calign/types.hpp"

namespace calign {

/// Purpose tags keep RNG streams for different quantities disjoint.
enum class StreamTag : std::uint64_t {
    fading = 1,
    noise = 2,
    dither = 3,
    symbols = 4,
    messages = 5,
    synthetic = 6,
    monte_carlo = 7,
    bootstrap = 8,
};

/// Derives a stream key from a master seed and up to four stream coordinates.
/// Keys depend only on their own coordinates, so adding layers or users never
/// shifts an existing stream.
std::uint64_t stream_key(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                         std::uint64_t b = 0, std::uint64_t c = 0, std::uint64_t d = 0);

/// Counter-based generator: the i-th output is a bijective mix of (key, i).
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next(); }
    result_type next();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();
    /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    cplx complex_normal();

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace calign
