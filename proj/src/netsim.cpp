#include "calign/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "calign/bounds.hpp"
#include "calign/lattice_codec.hpp"
#include "calign/quantizer.hpp"
#include "calign/rng.hpp"

namespace calign {
namespace {

constexpr std::size_t kKappa = 2;  // Z_q symbols per stream per tuple: one complex symbol

using Values = std::vector<std::vector<std::int64_t>>;  // [column or row][kappa]

struct TupleRun {
    TransmitVectorSet pre;
    std::vector<std::vector<MatchedFilter>> filters;
    TupleChannel ch;
    std::vector<Subchannel> subchannels;
    std::vector<std::vector<cplx>> noise;  // [m][l]
};

struct PreparedLayer {
    LayerReport report;
    std::vector<TupleRun> runs;
};

struct CodecOutcome {
    std::vector<Values> decoded;                       // per tuple, selected rows
    std::vector<std::optional<EquationSystem>> systems;  // per tuple, selected rows
};

std::uint64_t trial_seed(const ExperimentConfig& c, int trial) {
    return stream_key(c.seed, StreamTag::monte_carlo, 0x7472, static_cast<std::uint64_t>(trial));
}

std::vector<std::size_t> streams_per_transmitter(const ExperimentConfig& c) {
    if (c.mode == PatternMode::two_user) {
        return {static_cast<std::size_t>(c.L), static_cast<std::size_t>(c.L - 1)};
    }
    const auto n = static_cast<std::size_t>(std::pow(c.I, c.K * c.K) + 0.5);
    return std::vector<std::size_t>(c.K, n);
}

double log2_plus(double x) { return x > 1.0 ? std::log2(x) : 0.0; }

PreparedLayer prepare_layer(const ExperimentConfig& c, std::uint64_t seed, int layer) {
    const MatchPattern pattern = c.pattern();
    const QuantizerConfig qc(c.nu, pattern.L);
    const int K = c.K;
    const int L = pattern.L;
    PreparedLayer out;
    LayerReport& rep = out.report;
    rep.layer = layer;
    rep.streams_per_transmitter = streams_per_transmitter(c);

    auto add_tuple = [&](const MatchedTuple& t, const GainSequence& seq, std::vector<std::vector<cplx>> noise) {
        TupleRun r;
        r.pre = build_precoders(t.base_cells, qc, pattern);
        r.filters = build_all_filters(r.pre);
        r.ch = tuple_channel(t, seq, r.pre);
        r.subchannels = extract_subchannels(t, seq, r.pre, r.filters, c.P);
        r.noise = std::move(noise);
        out.runs.push_back(std::move(r));
    };

    if (c.matching == MatchingMode::greedy) {
        FadingConfig fc;
        fc.K = K;
        fc.T = c.T;
        fc.kind = c.fading;
        fc.correlation = c.correlation;
        fc.seed = seed;
        fc.layer = layer;
        GainSequence seq = generate_process(fc);
        if (c.representative_gains) {
            for (std::size_t t = 0; t < seq.T(); ++t) {
                for (int m = 0; m < K; ++m) {
                    for (int k = 0; k < K; ++k) {
                        const QuantizedGain g = quantize(seq.at(t, m, k), qc);
                        if (!g.is_infinity()) seq.at(t, m, k) = representative(g, qc);
                    }
                }
            }
        }
        const MatchResult mr = match(seq, qc, pattern);
        rep.channel_uses = c.T;
        rep.matched_fraction = mr.matched_fraction;
        rep.delta = mr.delta_matrix;
        if (c.enforce_typicality) {
            rep.typicality_checked = true;
            rep.typicality_pass = check_typicality(seq, qc, L, c.eta).pass;
            rep.outage = !rep.typicality_pass;
        }
        const std::vector<cplx> z = generate_noise(seed, c.T, K, layer);
        for (const auto& t : mr.tuples) {
            std::vector<std::vector<cplx>> noise(K, std::vector<cplx>(L));
            for (int m = 0; m < K; ++m) {
                for (int l = 0; l < L; ++l) noise[m][l] = z[t.slots[l] * K + m];
            }
            add_tuple(t, seq, std::move(noise));
        }
    } else {
        for (std::size_t j = 0; j < c.tuples; ++j) {
            CounterRng rng(stream_key(seed, StreamTag::synthetic, static_cast<std::uint64_t>(layer), j));
            auto drawn = synthesize_matched_tuple(rng, qc, pattern);
            if (c.representative_gains) drawn = representative_tuple(drawn.first.base_cells, qc, pattern);
            CounterRng nrng(stream_key(seed, StreamTag::noise, static_cast<std::uint64_t>(layer), j));
            std::vector<std::vector<cplx>> noise(K, std::vector<cplx>(L));
            for (auto& row : noise) {
                for (auto& z : row) z = nrng.complex_normal();
            }
            add_tuple(drawn.first, drawn.second, std::move(noise));
        }
        rep.channel_uses = c.tuples * static_cast<std::size_t>(L);
        rep.matched_fraction = 1.0;
        // Probability that a K x K slot matrix holds at least one gain above nu.
        const double p_out = std::exp(-static_cast<double>(c.nu) * c.nu);
        rep.delta = -std::expm1(K * K * std::log1p(-p_out));
    }
    rep.tuples = out.runs.size();

    // Rates and SINR statistics.
    const double elogc = expected_log_c(K, ElogcMethod::closed_form).value;
    rep.formula_rate = c.mode == PatternMode::two_user
                           ? achievable_k2(c.P, c.L, c.nu, elogc, rep.delta)
                           : achievable_general(c.P, K, c.I, elogc);
    const std::size_t total_streams =
        std::accumulate(rep.streams_per_transmitter.begin(), rep.streams_per_transmitter.end(), std::size_t{0});
    double rate_sum = 0.0;
    std::vector<double> per_tx(K, 0.0);
    double sum = 0.0, sum_db = 0.0;
    SinrStats& s = rep.sinr;
    s.min = std::numeric_limits<double>::infinity();
    s.max = 0.0;
    for (const auto& r : out.runs) {
        double tuple_min = std::numeric_limits<double>::infinity();
        for (const auto& sc : r.subchannels) {
            if (sc.spec.flagged) continue;
            const double v = sc.sinr.empirical_sinr;
            tuple_min = std::min(tuple_min, v);
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
            sum_db += 10.0 * std::log10(v);
            ++s.subchannels;
            if (v < sc.sinr.theoretical_lower_bound) ++s.bound_violations;
        }
        if (std::isfinite(tuple_min)) {
            rate_sum += total_streams * log2_plus(tuple_min);
            for (int k = 0; k < K; ++k) per_tx[k] += rep.streams_per_transmitter[k] * log2_plus(tuple_min);
        }
    }
    if (s.subchannels == 0) {
        s.min = 0.0;
    } else {
        s.mean = sum / static_cast<double>(s.subchannels);
        s.mean_db = sum_db / static_cast<double>(s.subchannels);
    }
    const double uses = rep.channel_uses > 0 ? static_cast<double>(rep.channel_uses) : 1.0;
    rep.empirical_rate = rep.outage ? 0.0 : rate_sum / uses;
    rep.per_transmitter_rate.resize(K);
    for (int k = 0; k < K; ++k) rep.per_transmitter_rate[k] = rep.outage ? 0.0 : per_tx[k] / uses;
    return out;
}

const MatchedFilter& find_filter(const std::vector<MatchedFilter>& filters, int id) {
    for (const auto& f : filters) {
        if (f.id == id) return f;
    }
    throw NumericError(fmt::format("netsim: matched filter {} not found", id));
}

CodecOutcome run_codec(PreparedLayer& layer, const ExperimentConfig& c, std::int64_t q, std::uint64_t seed,
                       const std::vector<Values>& inputs, std::size_t n_use) {
    LayerReport& rep = layer.report;
    const int K = c.K;
    CodecOutcome out;
    out.decoded.resize(n_use);
    out.systems.resize(n_use);
    rep.q = q;
    rep.codec_tuples = n_use;

    for (std::size_t j = 0; j < n_use; ++j) {
        const TupleRun& run = layer.runs[j];
        const Values& w = inputs[j];
        const std::size_t columns = w.size();
        out.decoded[j].assign(columns, std::vector<std::int64_t>(kKappa, 0));

        std::vector<const Subchannel*> used;
        for (const auto& sc : run.subchannels) {
            if (!sc.spec.flagged) used.push_back(&sc);
        }
        EquationSystem full;
        try {
            full = target_equations(run.subchannels, run.pre, q);
        } catch (const ModulusError&) {
            ++rep.modulus_outages;
            ++rep.block_errors;
            continue;
        }
        const std::vector<std::size_t> chosen = greedy_full_rank_rows(full);
        if (chosen.size() != full.columns.size() || full.columns.size() != columns) {
            ++rep.block_errors;
            continue;
        }
        ++rep.invertible_tuples;
        EquationSystem sys = select_rows(full, chosen);

        CodecConfig cfg;
        cfg.q = static_cast<std::int32_t>(q);
        cfg.n = kKappa;
        cfg.P = run.pre.per_stream_power(c.P);
        cfg.seed = stream_key(seed, StreamTag::dither, static_cast<std::uint64_t>(rep.layer));

        std::vector<Dither> dithers(columns);
        std::vector<std::vector<cplx>> symbols(K);
        for (int k = 0; k < K; ++k) symbols[k].assign(run.pre.vectors[k].size(), cplx(0.0));
        for (std::size_t col = 0; col < columns; ++col) {
            const StreamRef s = full.columns[col];
            Message msg(kKappa);
            for (std::size_t i = 0; i < kKappa; ++i) msg[i] = static_cast<std::int32_t>(w[col][i]);
            dithers[col] = draw_dither(cfg, col, j);
            symbols[s.k][s.index] = encode(msg, dithers[col], cfg)[0];
        }
        const auto y = transmit(run.ch, run.pre, symbols, c.noiseless ? std::vector<std::vector<cplx>>{} : run.noise);

        const Values truth = evaluate_rows(sys, w);
        bool block_error = rep.outage;
        for (std::size_t r = 0; r < chosen.size(); ++r) {
            const Subchannel& sc = *used[chosen[r]];
            const cplx obs = apply_filter(find_filter(run.filters[sc.spec.receiver], sc.spec.filter_id),
                                          y[sc.spec.receiver]);
            SubchannelModel model;
            model.beta = sc.spec.beta;
            model.a = sc.spec.coefficients;
            model.K = K;
            std::vector<Dither> per_tx(K, Dither(kKappa, 0.0));
            for (const auto& s : sc.spec.streams) per_tx[s.k] = dithers[full.column_of(s)];
            const Message u = decode_equation({obs}, model, per_tx, cfg);
            for (std::size_t i = 0; i < kKappa; ++i) {
                out.decoded[j][r][i] = rep.outage ? 0 : u[i];
                const bool wrong = out.decoded[j][r][i] != truth[r][i];
                rep.symbol_errors += wrong;
                block_error = block_error || wrong;
            }
            rep.symbols += kKappa;
        }
        rep.block_errors += block_error;
        out.systems[j] = std::move(sys);
    }
    rep.error_rate = n_use > 0 ? static_cast<double>(rep.block_errors) / static_cast<double>(n_use) : 0.0;
    rep.error_budget = c.error_target / c.D;
    rep.meets_error_target = rep.error_rate <= rep.error_budget;
    return out;
}

TrialReport run_trial(const ExperimentConfig& c, int trial) {
    const std::uint64_t seed = trial_seed(c, trial);
    std::vector<PreparedLayer> layers;
    for (int d = 0; d < c.D; ++d) layers.push_back(prepare_layer(c, seed, d));

    std::int64_t q = c.q;
    if (q == 0) {
        std::int64_t max_a = 1;
        for (const auto& l : layers) {
            for (const auto& r : l.runs) max_a = std::max(max_a, max_abs_coefficient(r.subchannels));
        }
        q = smallest_safe_prime(max_a);
    }
    std::size_t n_use = layers.front().runs.size();
    for (const auto& l : layers) n_use = std::min(n_use, l.runs.size());

    const std::size_t columns = std::accumulate(layers.front().report.streams_per_transmitter.begin(),
                                                layers.front().report.streams_per_transmitter.end(),
                                                std::size_t{0});
    std::vector<Values> source(n_use, Values(columns, std::vector<std::int64_t>(kKappa)));
    for (std::size_t j = 0; j < n_use; ++j) {
        for (std::size_t col = 0; col < columns; ++col) {
            CounterRng rng(stream_key(seed, StreamTag::messages, j, col));
            for (auto& x : source[j][col]) x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(q)));
        }
    }

    std::vector<CodecOutcome> outcomes;
    std::vector<Values> inputs = source;
    for (auto& l : layers) {
        outcomes.push_back(run_codec(l, c, q, seed, inputs, n_use));
        inputs = outcomes.back().decoded;
    }

    TrialReport tr;
    tr.trial = trial;
    tr.blocks = n_use;
    for (std::size_t j = 0; j < n_use; ++j) {
        Values values = inputs[j];
        bool ok = true;
        for (int d = c.D - 1; d >= 0 && ok; --d) {
            const auto& sys = outcomes[d].systems[j];
            if (!sys) {
                ok = false;
                break;
            }
            try {
                values = recover_messages(*sys, values);
            } catch (const DomainError&) {
                ok = false;
            } catch (const DecodeIntegrityError&) {
                ok = false;
            }
        }
        if (!ok || values != source[j]) ++tr.end_to_end_block_errors;
    }
    tr.end_to_end_error = n_use > 0 ? static_cast<double>(tr.end_to_end_block_errors) / static_cast<double>(n_use) : 0.0;
    tr.end_to_end_rate = std::numeric_limits<double>::infinity();
    tr.formula_rate = std::numeric_limits<double>::infinity();
    for (auto& l : layers) {
        tr.union_bound += l.report.error_rate;
        tr.end_to_end_rate = std::min(tr.end_to_end_rate, l.report.empirical_rate);
        tr.formula_rate = std::min(tr.formula_rate, l.report.formula_rate);
        tr.mean_sinr_db += l.report.sinr.mean_db / c.D;
        tr.layers.push_back(std::move(l.report));
    }
    return tr;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (K < 2) throw ConfigError(fmt::format("experiment: K = {} must be at least 2", K));
    if (mode == PatternMode::two_user && K != 2) throw ConfigError("experiment: two-user mode needs K = 2");
    if (mode == PatternMode::two_user && L < 2) throw ConfigError(fmt::format("experiment: L = {} must be >= 2", L));
    if (mode == PatternMode::general && I < 1) throw ConfigError(fmt::format("experiment: I = {} must be >= 1", I));
    if (D < 1) throw ConfigError(fmt::format("experiment: D = {} must be at least 1", D));
    if (!(P >= 1.0) || !std::isfinite(P)) throw ConfigError(fmt::format("experiment: P = {} must be >= 1", P));
    if (nu < 1) throw ConfigError(fmt::format("experiment: nu = {} must be positive", nu));
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("experiment: eta must lie in (0, 1)");
    if (q != 0 && (q < 2 || !is_prime(q) || q > (1LL << 30))) {
        throw ConfigError(fmt::format("experiment: q = {} must be a prime below 2^30 or 0", q));
    }
    if (trials < 1) throw ConfigError("experiment: trials must be positive");
    if (matching == MatchingMode::greedy && T == 0) throw ConfigError("experiment: T must be positive");
    if (matching == MatchingMode::synthetic && tuples == 0) throw ConfigError("experiment: tuples must be positive");
    if (fading == ProcessKind::ar1 && !(correlation >= 0.0 && correlation < 1.0)) {
        throw ConfigError("experiment: AR(1) correlation must lie in [0, 1)");
    }
    if (!(error_target > 0.0 && error_target < 1.0)) throw ConfigError("experiment: error target must lie in (0, 1)");
    if (bootstrap_resamples < 1) throw ConfigError("experiment: bootstrap resamples must be positive");
    pattern().validate();
}

MatchPattern ExperimentConfig::pattern() const {
    return mode == PatternMode::two_user ? MatchPattern::two_user(L) : MatchPattern::general(K, I);
}

LayerReport run_single_layer(const ExperimentConfig& config) {
    ExperimentConfig c = config;
    c.D = 1;
    c.validate();
    return run_trial(c, 0).layers.front();
}

NetworkReport run_multilayer(const ExperimentConfig& config) {
    config.validate();
    NetworkReport report;
    report.config = config;
    std::vector<double> sinr_db, rates;
    for (int t = 0; t < config.trials; ++t) {
        report.trials.push_back(run_trial(config, t));
        sinr_db.push_back(report.trials.back().mean_sinr_db);
        rates.push_back(report.trials.back().end_to_end_rate);
        report.mean_end_to_end_error += report.trials.back().end_to_end_error / config.trials;
    }
    const std::uint64_t bs = stream_key(config.seed, StreamTag::bootstrap);
    report.sinr_db = bootstrap_mean(sinr_db, config.bootstrap_resamples, bs);
    report.end_to_end_rate = bootstrap_mean(rates, config.bootstrap_resamples, bs + 1);
    return report;
}

Interval bootstrap_mean(const std::vector<double>& values, int resamples, std::uint64_t seed) {
    if (values.empty()) throw DomainError("bootstrap_mean: no values");
    if (resamples < 1) throw DomainError("bootstrap_mean: resamples must be positive");
    Interval iv;
    const double n = static_cast<double>(values.size());
    iv.estimate = std::accumulate(values.begin(), values.end(), 0.0) / n;
    CounterRng rng(stream_key(seed, StreamTag::bootstrap, values.size()));
    std::vector<double> means(resamples);
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[rng.below(values.size())];
        m = s / n;
    }
    std::sort(means.begin(), means.end());
    auto pick = [&](double p) {
        const auto idx = static_cast<std::size_t>(std::clamp(p * (resamples - 1), 0.0, resamples - 1.0));
        return means[idx];
    };
    iv.lo = pick(0.025);
    iv.hi = pick(0.975);
    return iv;
}

}  // namespace calign
