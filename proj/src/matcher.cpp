#include "calign/matcher.hpp"

#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

#include <fmt/core.h>

namespace calign {

int general_subblock_count(int K, int I) {
    if (K < 2 || I < 1) {
        throw ConfigError(fmt::format("general pattern needs K >= 2 and I >= 1 (K={}, I={})", K, I));
    }
    long long L = 1;
    for (int e = 0; e < K * K; ++e) {
        L *= I + 1;
        if (L > (1LL << 31) - 1) {
            throw ConfigError(fmt::format("(I+1)^(K^2) overflows for K={}, I={}", K, I));
        }
    }
    return static_cast<int>(L);
}

MatchPattern MatchPattern::two_user(int L) {
    if (L < 1) throw ConfigError(fmt::format("two_user pattern needs L >= 1, got {}", L));
    MatchPattern p;
    p.K = 2;
    p.mode = PatternMode::two_user;
    p.L = L;
    p.d.assign(4, 0);
    p.d[1 * 2 + 0] = 1;
    return p;
}

MatchPattern MatchPattern::general(int K, int I) {
    MatchPattern p;
    p.K = K;
    p.mode = PatternMode::general;
    p.I = I;
    p.L = general_subblock_count(K, I);
    p.d.assign(K * K, 0);
    for (int m = 0; m < K; ++m) {
        for (int k = 0; k < K; ++k) {
            long long v = 1;
            for (int e = 0; e < k * K + m; ++e) v *= I + 1;
            p.d[m * K + k] = v;
        }
    }
    return p;
}

void MatchPattern::validate() const {
    if (static_cast<int>(d.size()) != K * K) throw ConfigError("MatchPattern: d must be K x K");
    if (L < 1) throw ConfigError("MatchPattern: L must be at least 1");
    if (mode == PatternMode::general && L != general_subblock_count(K, I)) {
        throw ConfigError(fmt::format("MatchPattern: general mode requires L = (I+1)^(K^2), got {}", L));
    }
}

CellMatrix quantize_slot(const GainSequence& seq, std::size_t t, const QuantizerConfig& qc) {
    CellMatrix cells;
    cells.reserve(seq.K() * seq.K());
    for (const cplx& h : seq.slot(t)) cells.push_back(quantize(h, qc));
    return cells;
}

CellMatrix rotate_matrix(const CellMatrix& cells, const MatchPattern& pattern, long long step,
                         const QuantizerConfig& qc) {
    CellMatrix out(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out[i] = rotate(cells[i], step * pattern.d[i], qc);
    }
    return out;
}

bool has_infinity(const CellMatrix& cells) {
    for (const auto& c : cells) {
        if (c.is_infinity()) return true;
    }
    return false;
}

std::string matrix_key(const CellMatrix& cells, const QuantizerConfig& qc) {
    std::string key(cells.size() * sizeof(std::int64_t), '\0');
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const std::int64_t idx = cells[i].index(qc);
        std::memcpy(key.data() + i * sizeof idx, &idx, sizeof idx);
    }
    return key;
}

namespace {

void check_match_inputs(const GainSequence& seq, const QuantizerConfig& qc,
                        const MatchPattern& pattern) {
    pattern.validate();
    qc.validate();
    if (qc.L != pattern.L) {
        throw ConfigError(fmt::format("match: quantizer L={} differs from pattern L={}", qc.L, pattern.L));
    }
    if (seq.K() != pattern.K) {
        throw ConfigError(fmt::format("match: sequence K={} differs from pattern K={}", seq.K(), pattern.K));
    }
}

}  // namespace

MatchResult match(const GainSequence& seq, const QuantizerConfig& qc, const MatchPattern& pattern) {
    check_match_inputs(seq, qc, pattern);
    const std::size_t L = static_cast<std::size_t>(pattern.L);
    MatchResult result;
    result.T = seq.T();
    const std::size_t B = seq.T() / L;
    result.T_used = B * L;

    std::vector<CellMatrix> cells(result.T_used);
    std::size_t inf_gains = 0, inf_slots = 0;
    for (std::size_t t = 0; t < result.T_used; ++t) {
        cells[t] = quantize_slot(seq, t, qc);
        std::size_t n = 0;
        for (const auto& c : cells[t]) n += c.is_infinity();
        inf_gains += n;
        inf_slots += n > 0;
    }
    if (result.T_used > 0) {
        result.delta_gain = static_cast<double>(inf_gains) / (result.T_used * cells[0].size());
        result.delta_matrix = static_cast<double>(inf_slots) / result.T_used;
    }

    // Unused finite slots of subblocks 2..L, grouped by cell matrix in time order.
    std::vector<std::unordered_map<std::string, std::deque<std::size_t>>> pools(L);
    for (std::size_t l = 1; l < L; ++l) {
        for (std::size_t t = l * B; t < (l + 1) * B; ++t) {
            if (!has_infinity(cells[t])) pools[l][matrix_key(cells[t], qc)].push_back(t);
        }
    }

    std::vector<std::deque<std::size_t>*> found(L, nullptr);
    for (std::size_t t1 = 0; t1 < B; ++t1) {
        const CellMatrix& base = cells[t1];
        if (has_infinity(base)) continue;
        bool ok = true;
        for (std::size_t l = 1; l < L && ok; ++l) {
            auto it = pools[l].find(matrix_key(rotate_matrix(base, pattern, static_cast<long long>(l), qc), qc));
            if (it == pools[l].end() || it->second.empty()) {
                ok = false;
            } else {
                found[l] = &it->second;
            }
        }
        if (!ok) continue;
        MatchedTuple tuple;
        tuple.base_cells = base;
        tuple.slots.reserve(L);
        tuple.slots.push_back(t1);
        for (std::size_t l = 1; l < L; ++l) {
            tuple.slots.push_back(found[l]->front());
            found[l]->pop_front();
        }
        result.tuples.push_back(std::move(tuple));
    }
    result.matched_fraction =
        result.T == 0 ? 0.0 : static_cast<double>(result.tuples.size() * L) / result.T;
    return result;
}

bool verify_tuple(const MatchedTuple& tuple, const GainSequence& seq, const QuantizerConfig& qc,
                  const MatchPattern& pattern) {
    const std::size_t L = static_cast<std::size_t>(pattern.L);
    if (tuple.slots.size() != L) return false;
    if (static_cast<int>(tuple.base_cells.size()) != pattern.K * pattern.K) return false;
    const std::size_t B = seq.T() / L;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t t = tuple.slots[l];
        if (t < l * B || t >= (l + 1) * B) return false;
        if (l > 0 && t <= tuple.slots[l - 1]) return false;
    }
    for (std::size_t l = 0; l < L; ++l) {
        for (int m = 0; m < pattern.K; ++m) {
            for (int k = 0; k < pattern.K; ++k) {
                const QuantizedGain base = tuple.base_cells[m * pattern.K + k];
                if (base.is_infinity()) return false;
                // Recompute the rotation from ring/sector integers directly.
                const long long S = qc.sectors();
                const long long shift = static_cast<long long>(l) * pattern.exponent(m, k) % qc.L;
                const QuantizedGain want{base.ring,
                                         static_cast<int>((base.sector + shift * qc.rings()) % S)};
                if (!(quantize(seq.at(tuple.slots[l], m, k), qc) == want)) return false;
            }
        }
    }
    return true;
}

bool verify_matching(const MatchResult& result, const GainSequence& seq,
                     const QuantizerConfig& qc, const MatchPattern& pattern) {
    std::unordered_set<std::size_t> used;
    for (const auto& tuple : result.tuples) {
        if (!verify_tuple(tuple, seq, qc, pattern)) return false;
        for (std::size_t t : tuple.slots) {
            if (!used.insert(t).second) return false;
        }
    }
    return true;
}

namespace {

TypicalityReport count_subblocks(const GainSequence& seq, const QuantizerConfig& qc, int L,
                                 double eta, std::vector<CellMatrix>* first_cells) {
    if (L < 1) throw ConfigError("check_typicality: L must be at least 1");
    if (!(eta > 0.0 && eta < 1.0)) {
        throw ConfigError(fmt::format("check_typicality: eta must lie in (0, 1), got {}", eta));
    }
    TypicalityReport report;
    report.eta = eta;
    report.L = L;
    const std::size_t B = seq.T() / L;
    report.T_used = B * L;
    std::unordered_map<std::string, std::vector<std::size_t>> counts;
    for (std::size_t t = 0; t < report.T_used; ++t) {
        CellMatrix cells = quantize_slot(seq, t, qc);
        auto [it, inserted] = counts.try_emplace(matrix_key(cells, qc));
        if (inserted) {
            it->second.assign(L, 0);
            if (first_cells) first_cells->push_back(cells);
        }
        ++it->second[t / B];
    }
    report.counts = {counts.begin(), counts.end()};
    report.distinct_matrices = report.counts.size();
    return report;
}

}  // namespace

TypicalityReport check_typicality(const GainSequence& seq, const QuantizerConfig& qc, int L,
                                  double eta) {
    TypicalityReport report = count_subblocks(seq, qc, L, eta, nullptr);
    report.min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& [key, per_block] : report.counts) {
        std::size_t total = 0;
        for (std::size_t c : per_block) total += c;
        // p_hat T/L with p_hat = total / T_used.
        const double expected = static_cast<double>(total) / L;
        for (std::size_t c : per_block) {
            report.min_ratio = std::min(report.min_ratio, c / expected);
            if (c < (1.0 - eta) * expected) ++report.violations;
        }
    }
    report.pass = report.T_used > 0 && report.violations == 0;
    return report;
}

TypicalityReport check_typicality_exact(const GainSequence& seq, const QuantizerConfig& qc, int L,
                                        double eta) {
    std::vector<CellMatrix> cells;
    TypicalityReport report = count_subblocks(seq, qc, L, eta, &cells);
    const double per_block = static_cast<double>(report.T_used) / L;
    report.min_ratio = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> seen_in_block(L, 0);
    // std::map reorders keys; recompute probabilities by key lookup.
    std::unordered_map<std::string, double> prob;
    for (const auto& c : cells) {
        auto [it, fresh] = prob.try_emplace(matrix_key(c, qc), 1.0);
        if (!fresh) continue;
        for (const auto& g : c) it->second *= rayleigh_cell_probability(g, qc);
    }
    for (const auto& [key, counts] : report.counts) {
        const double expected = prob.at(key) * per_block;
        for (int l = 0; l < L; ++l) {
            seen_in_block[l] += counts[l] > 0;
            report.min_ratio = std::min(report.min_ratio, counts[l] / expected);
            if (counts[l] < (1.0 - eta) * expected) ++report.violations;
        }
    }
    // Every matrix has positive probability, so an absent one is a violation.
    const double universe = std::pow(static_cast<double>(qc.finite_cells() + 1),
                                     static_cast<double>(seq.K() * seq.K()));
    for (int l = 0; l < L; ++l) {
        const double missing = universe - static_cast<double>(seen_in_block[l]);
        if (missing > 0) {
            report.violations += static_cast<std::size_t>(std::min(missing, 1e18));
            report.min_ratio = 0.0;
        }
    }
    report.pass = report.T_used > 0 && report.violations == 0;
    return report;
}

namespace {

cplx sample_in_cell(CounterRng& rng, QuantizedGain cell, const QuantizerConfig& qc) {
    const double lo = (cell.ring - 1.0) / qc.nu;
    const double hi = static_cast<double>(cell.ring) / qc.nu;
    const double width = hi * hi - lo * lo;
    const double sector_width = 2.0 * std::numbers::pi / qc.sectors();
    for (;;) {
        // |h|^2 is Exp(1) truncated to [lo^2, hi^2); invert its CDF.
        const double u = rng.uniform();
        const double r2 = lo * lo - std::log1p(u * std::expm1(-width));
        const double angle = (cell.sector + rng.uniform()) * sector_width;
        const cplx h = std::polar(std::sqrt(r2), angle);
        if (quantize(h, qc) == cell) return h;
    }
}

}  // namespace

std::pair<MatchedTuple, GainSequence> synthesize_matched_tuple(CounterRng& rng,
                                                               const QuantizerConfig& qc,
                                                               const MatchPattern& pattern) {
    check_match_inputs(GainSequence({pattern.K, 1}, std::vector<cplx>(pattern.K * pattern.K)), qc,
                       pattern);
    const int K = pattern.K;
    const std::size_t L = static_cast<std::size_t>(pattern.L);
    FadingConfig fc;
    fc.K = K;
    fc.T = L;
    std::vector<cplx> gains(L * K * K);
    MatchedTuple tuple;
    tuple.base_cells.resize(K * K);
    for (int i = 0; i < K * K; ++i) {
        cplx h;
        do {
            h = rng.complex_normal();
        } while (std::abs(h) > qc.nu);
        gains[i] = h;
        tuple.base_cells[i] = quantize(h, qc);
    }
    for (std::size_t l = 1; l < L; ++l) {
        const CellMatrix target = rotate_matrix(tuple.base_cells, pattern, static_cast<long long>(l), qc);
        for (int i = 0; i < K * K; ++i) gains[l * K * K + i] = sample_in_cell(rng, target[i], qc);
    }
    for (std::size_t l = 0; l < L; ++l) tuple.slots.push_back(l);
    return {std::move(tuple), GainSequence(fc, std::move(gains))};
}

std::pair<MatchedTuple, GainSequence> representative_tuple(const CellMatrix& base,
                                                           const QuantizerConfig& qc,
                                                           const MatchPattern& pattern) {
    const int K = pattern.K;
    if (static_cast<int>(base.size()) != K * K || has_infinity(base)) {
        throw DomainError("representative_tuple: base cells must be K x K and finite");
    }
    const std::size_t L = static_cast<std::size_t>(pattern.L);
    FadingConfig fc;
    fc.K = K;
    fc.T = L;
    std::vector<cplx> gains(L * K * K);
    MatchedTuple tuple;
    tuple.base_cells = base;
    for (std::size_t l = 0; l < L; ++l) {
        const CellMatrix cells = rotate_matrix(base, pattern, static_cast<long long>(l), qc);
        for (int i = 0; i < K * K; ++i) gains[l * K * K + i] = representative(cells[i], qc);
        tuple.slots.push_back(l);
    }
    return {std::move(tuple), GainSequence(fc, std::move(gains))};
}

}  // namespace calign
