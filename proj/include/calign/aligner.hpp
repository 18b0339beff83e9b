#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "calign/fading.hpp"
#include "calign/matcher.hpp"
#include "calign/quantizer.hpp"

namespace calign {

/// Positive rational num/den in lowest terms.
struct Rational {
    long long num = 1;
    long long den = 1;

    static Rational make(long long num, long long den);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool is_integer() const { return den == 1; }
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    bool operator==(const Rational&) const = default;
    std::string to_string() const;
};

/// The normalizer for a magnitude y > 0: b = n or 1/n with the smallest n such that
/// b*y lies in [1, 2).
Rational select_normalizer(double y);

/// One transmit vector v = rho F^p 1, kept exactly as a normalizer product times a
/// monomial prod h_hat^alpha in the quantized base gains.
struct TransmitVector {
    int owner = 0;                   ///< transmitter k, zero-based
    int index = 0;                   ///< position within the owner's set
    std::vector<long long> alpha;    ///< K*K exponents of h_hat, row-major (m, k)
    std::vector<Rational> normalizers;
    double scale = 1.0;              ///< product of normalizers
    cplx rho;                        ///< scale * prod h_hat^alpha
    long long fourier_power = 0;     ///< in [0, L)

    /// ||v|| = |rho| sqrt(L).
    double norm(int L) const;
    /// Entries rho * omega_L^{p (l-1)}, l = 1..L.
    std::vector<cplx> entries(int L) const;
};

struct TransmitVectorSet {
    MatchPattern pattern;
    QuantizerConfig qc;
    CellMatrix base_cells;
    std::vector<cplx> h_hat;                    ///< representatives of base cells
    double c = 1.0;                             ///< prod max{|h_hat|, 1/|h_hat|}
    std::vector<std::vector<TransmitVector>> vectors;  ///< per transmitter
    /// General mode: b_{m,k}^{(a)} for a = 1..I, indexed [m*K+k][a-1].
    std::vector<std::vector<Rational>> b_table;

    int K() const { return pattern.K; }
    int L() const { return pattern.L; }
    std::size_t stream_count() const;
    /// Power per stream: P/(4 L c^2) for two users, P/(4^{K^2} L) in general mode.
    double per_stream_power(double P) const;
    /// Largest admissible squared vector norm: 4 L c^2 or 4^{K^2} L.
    double max_norm2() const;
};

/// Two-user recursion: L vectors at transmitter 1, L-1 at transmitter 2.
TransmitVectorSet build_precoders_k2(const CellMatrix& base_cells, const QuantizerConfig& qc, int L);

/// Monomial family with exponents in {0..I-1}^{K^2}; I^{K^2} vectors per transmitter.
TransmitVectorSet build_precoders_general(const CellMatrix& base_cells, const QuantizerConfig& qc,
                                          int K, int I);

/// Dispatches on pattern.mode.
TransmitVectorSet build_precoders(const CellMatrix& base_cells, const QuantizerConfig& qc,
                                  const MatchPattern& pattern);

struct StreamRef {
    int k = 0;       ///< transmitter
    int index = 0;   ///< vector index at that transmitter
    bool operator==(const StreamRef&) const = default;
};

/// A unit-norm matched filter phase * F^p 1 / sqrt(L).
struct MatchedFilter {
    int receiver = 0;
    int id = 0;
    long long fourier_power = 0;
    cplx phase;                             ///< unit modulus
    std::vector<long long> exponents;       ///< received monomial exponent tuple
    std::vector<StreamRef> aligned;         ///< streams observed along this direction
    std::vector<Rational> ratios;           ///< exact gain ratio of each aligned stream

    std::vector<cplx> entries(int L) const;
};

/// Receive directions D_hat_{m,k} v / ||D_hat_{m,k} v||, one per distinct Fourier power.
/// In two-user mode receiver 2 drops the direction that carries s_{1,1} alone.
std::vector<MatchedFilter> build_matched_filters(const TransmitVectorSet& precoders, int receiver);

struct SubchannelSpec {
    int receiver = 0;
    int filter_id = 0;
    long long filter_power = 0;
    std::vector<long long> coefficients;   ///< a_k per transmitter, 0 = absent
    std::vector<StreamRef> streams;        ///< participating streams, one per nonzero a_k
    double beta = 0.0;                     ///< positive scale
    Rational post_scale;                   ///< rho_tilde
    double gamma2 = 0.0;                   ///< mismatch bound per coefficient
    double sigma2_bound = 0.0;             ///< leakage power bound
    bool flagged = false;                  ///< no aligned stream
};

struct SinrDecomposition {
    double desired_power = 0.0;
    double mismatch_power = 0.0;
    double leakage_power = 0.0;
    double noise_power = 1.0;
    double empirical_sinr = 0.0;
    double theoretical_lower_bound = 0.0;
    double max_mismatch_coeff2 = 0.0;      ///< max |e|^2 over aligned streams
};

struct Subchannel {
    SubchannelSpec spec;
    SinrDecomposition sinr;
};

enum class ReceiverCase { k2_receiver1, k2_receiver2, general };

/// Lower bounds on the subchannel SINR. Pass nu = infinity for the unquantized limit.
double sinr_lower_bound(double c, double P, int L, double nu, int K, ReceiverCase which);

/// Quantized channel matrices D_hat_{m,k} and true D_{m,k} over the tuple's L slots.
struct TupleChannel {
    int K = 0;
    int L = 0;
    std::vector<std::vector<cplx>> D;      ///< [m*K+k] -> L diagonal entries
    std::vector<std::vector<cplx>> D_hat;
};

TupleChannel tuple_channel(const MatchedTuple& tuple, const GainSequence& seq,
                           const TransmitVectorSet& precoders);

/// Builds every subchannel at every receiver and decomposes its SINR against the true gains.
std::vector<Subchannel> extract_subchannels(const MatchedTuple& tuple, const GainSequence& seq,
                                            const TransmitVectorSet& precoders,
                                            const std::vector<std::vector<MatchedFilter>>& filters,
                                            double P);

/// Convenience: filters for every receiver.
std::vector<std::vector<MatchedFilter>> build_all_filters(const TransmitVectorSet& precoders);

/// Received vectors y_m = sum_k D_{m,k} x_k + z_m for the given per-stream symbols
/// symbols[k][index] and per-receiver noise noise[m] (length L each, may be empty for none).
std::vector<std::vector<cplx>> transmit(const TupleChannel& channel,
                                        const TransmitVectorSet& precoders,
                                        const std::vector<std::vector<cplx>>& symbols,
                                        const std::vector<std::vector<cplx>>& noise);

/// Matched filter output filter^dagger y.
cplx apply_filter(const MatchedFilter& filter, const std::vector<cplx>& y);

/// Stream exponent tuple recovered from a general-mode Fourier power by (I+1)-ary expansion.
std::vector<long long> factor_fourier_power(long long power, const MatchPattern& pattern);

}  // namespace calign
