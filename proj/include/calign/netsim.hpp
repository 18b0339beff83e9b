#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "calign/aligner.hpp"
#include "calign/fading.hpp"
#include "calign/function_system.hpp"
#include "calign/matcher.hpp"

namespace calign {

enum class MatchingMode {
    greedy,     ///< draw T slots of fading and match them
    synthetic,  ///< draw matched tuples directly from the conditional cell law
};

struct ExperimentConfig {
    int K = 2;
    int D = 1;
    double P = 100.0;
    PatternMode mode = PatternMode::two_user;
    int L = 4;                  ///< two-user mode
    int I = 1;                  ///< general mode
    int nu = 64;
    double eta = 0.1;
    std::int64_t q = 0;         ///< 0 picks the smallest prime above twice the largest coefficient
    std::uint64_t seed = 1;
    int trials = 1;
    MatchingMode matching = MatchingMode::synthetic;
    std::size_t T = 100000;     ///< greedy: slots per layer
    std::size_t tuples = 1000;  ///< synthetic: tuples per layer
    ProcessKind fading = ProcessKind::iid;
    double correlation = 0.0;
    bool noiseless = false;             ///< z = 0
    bool representative_gains = false;  ///< true gains equal their cell representatives
    bool enforce_typicality = false;    ///< greedy: a failed check makes the layer an outage
    double error_target = 1e-2;         ///< end-to-end; each layer gets error_target / D
    int bootstrap_resamples = 1000;

    void validate() const;
    MatchPattern pattern() const;
};

struct SinrStats {
    std::size_t subchannels = 0;
    double min = 0.0;
    double mean = 0.0;
    double mean_db = 0.0;
    double max = 0.0;
    std::size_t bound_violations = 0;  ///< empirical SINR below its lower bound
};

struct LayerReport {
    int layer = 0;
    std::size_t tuples = 0;
    std::size_t channel_uses = 0;     ///< denominator of the empirical rate
    double matched_fraction = 0.0;
    double delta = 0.0;               ///< fraction of slot matrices with an infinite cell
    bool typicality_checked = false;
    bool typicality_pass = true;
    bool outage = false;
    std::int64_t q = 0;
    std::vector<std::size_t> streams_per_transmitter;
    double formula_rate = 0.0;        ///< closed-form achievable rate, bits per channel use
    double empirical_rate = 0.0;      ///< sum over tuples of streams * log2+(min SINR) / uses
    std::vector<double> per_transmitter_rate;
    SinrStats sinr;
    std::size_t codec_tuples = 0;     ///< tuples pushed through the codec
    std::size_t invertible_tuples = 0;
    std::size_t modulus_outages = 0;
    std::size_t block_errors = 0;     ///< tuples with at least one wrong equation value
    std::size_t symbol_errors = 0;
    std::size_t symbols = 0;
    double error_rate = 0.0;          ///< block_errors / codec_tuples
    double error_budget = 0.0;
    bool meets_error_target = false;
};

struct TrialReport {
    int trial = 0;
    std::vector<LayerReport> layers;
    std::size_t blocks = 0;            ///< tuples carried end to end
    std::size_t end_to_end_block_errors = 0;
    double end_to_end_error = 0.0;
    double union_bound = 0.0;          ///< sum of per-layer error rates
    double end_to_end_rate = 0.0;      ///< min over layers of the empirical rate
    double formula_rate = 0.0;         ///< min over layers of the formula rate
    double mean_sinr_db = 0.0;
};

struct Interval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct NetworkReport {
    ExperimentConfig config;
    std::vector<TrialReport> trials;
    Interval sinr_db;          ///< bootstrap 95% interval of the per-trial mean SINR in dB
    Interval end_to_end_rate;  ///< same for the end-to-end empirical rate
    double mean_end_to_end_error = 0.0;
};

/// One layer (index 0) of one trial with fresh uniform messages.
LayerReport run_single_layer(const ExperimentConfig& config);

/// D layers per trial; layer d re-encodes layer d-1's decoded equation values as its messages
/// and the destination inverts the composition.
NetworkReport run_multilayer(const ExperimentConfig& config);

/// Percentile bootstrap of the mean.
Interval bootstrap_mean(const std::vector<double>& values, int resamples, std::uint64_t seed);

}  // namespace calign
