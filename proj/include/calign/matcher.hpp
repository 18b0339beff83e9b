#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "calign/fading.hpp"
#include "calign/quantizer.hpp"
#include "calign/rng.hpp"

namespace calign {

enum class PatternMode { two_user, general };

/// Phase-exponent pattern d_{m,k}; slot l of a tuple must see rotate(base, (l-1) d_{m,k}).
struct MatchPattern {
    int K = 2;
    PatternMode mode = PatternMode::two_user;
    int I = 0;                      ///< general mode only
    int L = 2;                      ///< number of subblocks
    std::vector<long long> d;       ///< K*K, row-major (m, k), zero-based

    /// d_{2,1} = 1, all other exponents 0. Any L >= 1.
    static MatchPattern two_user(int L);
    /// d_{m,k} = (I+1)^{(k-1)K+m-1} (one-based m, k) and L = (I+1)^{K^2}.
    static MatchPattern general(int K, int I);

    long long exponent(int m, int k) const { return d[m * K + k]; }
    void validate() const;
};

/// (I+1)^{K^2}, throwing ConfigError on overflow past 2^31.
int general_subblock_count(int K, int I);

/// Quantized K x K gains of one slot, row-major (m, k).
using CellMatrix = std::vector<QuantizedGain>;

CellMatrix quantize_slot(const GainSequence& seq, std::size_t t, const QuantizerConfig& qc);
CellMatrix rotate_matrix(const CellMatrix& cells, const MatchPattern& pattern, long long step,
                         const QuantizerConfig& qc);
bool has_infinity(const CellMatrix& cells);
/// Exact byte key of a cell matrix for hashing.
std::string matrix_key(const CellMatrix& cells, const QuantizerConfig& qc);

struct MatchedTuple {
    std::vector<std::size_t> slots;  ///< t_1 < ... < t_L, zero-based
    CellMatrix base_cells;           ///< quantized gains at t_1
};

struct MatchResult {
    std::vector<MatchedTuple> tuples;
    std::size_t T = 0;           ///< blocklength before truncation
    std::size_t T_used = 0;      ///< largest multiple of L not above T
    double matched_fraction = 0; ///< tuples * L / T
    double delta_gain = 0;       ///< fraction of individual gains quantized to infinity
    double delta_matrix = 0;     ///< fraction of slots with at least one infinite gain
};

/// Greedy first-fit matching in increasing t_1. Trailing slots beyond a multiple
/// of L are ignored. Requires qc.L == pattern.L.
MatchResult match(const GainSequence& seq, const QuantizerConfig& qc, const MatchPattern& pattern);

/// Checks one tuple's rotation conditions and subblock membership by exact cell arithmetic.
bool verify_tuple(const MatchedTuple& tuple, const GainSequence& seq, const QuantizerConfig& qc,
                  const MatchPattern& pattern);

/// Independent post-hoc check of a whole matching: every tuple valid, slots disjoint.
bool verify_matching(const MatchResult& result, const GainSequence& seq,
                     const QuantizerConfig& qc, const MatchPattern& pattern);

struct TypicalityReport {
    double eta = 0;
    int L = 0;
    std::size_t T_used = 0;
    /// Per cell-matrix key, counts in each subblock.
    std::map<std::string, std::vector<std::size_t>> counts;
    std::size_t distinct_matrices = 0;
    std::size_t violations = 0;  ///< (matrix, subblock) pairs below threshold
    double min_ratio = 0;        ///< min count / expected count over all pairs
    bool pass = false;
};

/// Empirical typicality: every subblock count >= (1-eta) p_hat T/L with p_hat the
/// whole-block frequency.
TypicalityReport check_typicality(const GainSequence& seq, const QuantizerConfig& qc, int L,
                                  double eta);

/// Typicality against the exact i.i.d. Rayleigh cell-matrix probabilities. Matrices that
/// never occur in a subblock count as zero, so this needs every one of the
/// (nu^4 L + 1)^{K^2} matrices in every subblock to pass.
TypicalityReport check_typicality_exact(const GainSequence& seq, const QuantizerConfig& qc, int L,
                                        double eta);

/// A matched tuple drawn directly: base gains are CN(0,1) conditioned on |h| <= nu,
/// and slot l gains are CN(0,1) conditioned on lying in the rotated base cell.
/// The returned sequence has T = L with slot l-1 in subblock l.
std::pair<MatchedTuple, GainSequence> synthesize_matched_tuple(CounterRng& rng,
                                                               const QuantizerConfig& qc,
                                                               const MatchPattern& pattern);

/// Same tuple shape with every true gain set to its cell representative.
std::pair<MatchedTuple, GainSequence> representative_tuple(const CellMatrix& base,
                                                           const QuantizerConfig& qc,
                                                           const MatchPattern& pattern);

}  // namespace calign
