// Acceptance runner: `acceptance --criterion N --cli PATH` checks one criterion and prints
// a single PASS/FAIL line. Tolerances are fixed below.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "calign/aligner.hpp"
#include "calign/bounds.hpp"
#include "calign/fading.hpp"
#include "calign/function_system.hpp"
#include "calign/lattice_codec.hpp"
#include "calign/matcher.hpp"
#include "calign/netsim.hpp"
#include "calign/quantizer.hpp"
#include "cli_runner.hpp"

using namespace calign;

namespace {

constexpr double kQuantizerSeconds = 10.0;
constexpr double kMatchingSeconds = 60.0;
constexpr double kAlignmentSeconds = 30.0;
constexpr double kMatchFractionFactor = 0.9;
constexpr double kCodecFactor = 3.0;
constexpr double kPerGainTarget = 1.4661;
constexpr double kPerGainTolerance = 0.005;
constexpr double kDepthRateTolerance = 0.02;
constexpr double kCoefficientRelTol = 1e-9;
constexpr double kIdentityRelTol = 1e-12;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail = what;
            pass = false;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Independent rank over Z_q: plain elimination using Fermat inverses.
std::size_t rank_oracle(std::vector<std::vector<std::int64_t>> A, std::int64_t q) {
    auto pw = [q](std::int64_t b, std::int64_t e) {
        std::int64_t r = 1;
        b %= q;
        while (e > 0) {
            if (e & 1) r = r * b % q;
            b = b * b % q;
            e >>= 1;
        }
        return r;
    };
    std::size_t rank = 0;
    const std::size_t n = A.empty() ? 0 : A[0].size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = rank;
        while (p < A.size() && ((A[p][c] % q) + q) % q == 0) ++p;
        if (p == A.size()) continue;
        std::swap(A[p], A[rank]);
        const std::int64_t inv = pw(((A[rank][c] % q) + q) % q, q - 2);
        for (std::size_t r = 0; r < A.size(); ++r) {
            if (r == rank) continue;
            const std::int64_t f = ((A[r][c] % q) + q) % q * inv % q;
            for (std::size_t j = 0; j < n; ++j) A[r][j] = ((A[r][j] - f * A[rank][j]) % q + q) % q;
        }
        ++rank;
    }
    return rank;
}

Outcome criterion_quantizer() {
    Outcome o;
    const auto t0 = Clock::now();
    for (int nu : {2, 4}) {
        for (int L : {1, 2, 4}) {
            const QuantizerConfig qc(nu, L);
            const std::int64_t expect = static_cast<std::int64_t>(nu) * nu * nu * nu * L + 1;
            o.require(qc.finite_cells() + 1 == expect, fmt::format("cell count at nu={}, L={}", nu, L));

            CounterRng rng(stream_key(101, StreamTag::monte_carlo, nu, L));
            const double bound = (std::numbers::pi + 1.0) / nu;
            double worst = 0.0;
            for (int s = 0; s < 100000; ++s) {
                const cplx h = rng.complex_normal();
                const auto g = quantize(h, qc);
                if (!g.is_infinity()) worst = std::max(worst, std::abs(h - representative(g, qc)));
            }
            o.require(worst <= bound, fmt::format("max error {} > {} at nu={}, L={}", worst, bound, nu, L));

            // Closure: rotating a cell by j lands on the cell of the rotated representative, and
            // L full steps return to the start.
            for (int r = 1; r <= qc.rings(); ++r) {
                for (int s = 0; s < qc.sectors(); ++s) {
                    const auto g = QuantizedGain::cell(r, s);
                    for (long long j = -L; j <= L; ++j) {
                        const cplx turned = representative(g, qc) * std::polar(1.0, 2 * std::numbers::pi * j / L);
                        o.require(rotate(g, j, qc) == quantize(turned, qc), "rotation disagrees with the plane");
                    }
                    o.require(rotate(g, L, qc) == g, "L steps do not close");
                }
            }
            o.require(rotate(QuantizedGain::infinity(), 1, qc).is_infinity(), "infinity not fixed");
        }
    }
    const double secs = seconds_since(t0);
    o.require(secs < kQuantizerSeconds, fmt::format("runtime {:.1f} s", secs));
    if (o.pass) o.detail = fmt::format("runtime {:.2f} s", secs);
    return o;
}

Outcome criterion_matching() {
    Outcome o;
    const auto t0 = Clock::now();
    const QuantizerConfig qc(2, 2);
    const auto pattern = MatchPattern::two_user(2);
    FadingConfig fc;
    fc.K = 2;
    fc.T = 400000;
    fc.seed = 202;
    const auto seq = generate_process(fc);
    const auto mr = match(seq, qc, pattern);
    o.require(verify_matching(mr, seq, qc, pattern), "rotation verifier rejected a tuple");
    for (const auto& t : mr.tuples) {
        for (std::size_t l = 0; l < t.slots.size(); ++l) {
            if (quantize_slot(seq, t.slots[l], qc) != rotate_matrix(t.base_cells, pattern, l, qc)) {
                o.require(false, "slot cells differ from rotated base");
                break;
            }
        }
    }
    const double target = kMatchFractionFactor * (1 - mr.delta_matrix) * (1 - mr.delta_matrix);
    const double secs = seconds_since(t0);
    const std::string stats =
        fmt::format("matched_fraction {:.4f}, target {:.4f}, delta {:.4f}, runtime {:.1f} s",
                    mr.matched_fraction, target, mr.delta_matrix, secs);
    o.require(mr.matched_fraction >= target, stats);
    o.require(secs < kMatchingSeconds, stats);
    if (o.pass) o.detail = stats;
    return o;
}

Outcome criterion_alignment() {
    Outcome o;
    const auto t0 = Clock::now();
    std::vector<std::pair<MatchPattern, int>> cases;
    for (int L : {2, 4, 8}) cases.push_back({MatchPattern::two_user(L), 64});
    for (int I : {1, 2}) cases.push_back({MatchPattern::general(2, I), 64});
    CounterRng rng(stream_key(303, StreamTag::synthetic));
    for (const auto& [p, nu] : cases) {
        const QuantizerConfig qc(nu, p.L);
        for (int trial = 0; trial < 20; ++trial) {
            const auto base = synthesize_matched_tuple(rng, qc, p).first.base_cells;
            const auto [t, seq] = representative_tuple(base, qc, p);
            const auto set = build_precoders(base, qc, p);
            const auto filters = build_all_filters(set);
            const auto subs = extract_subchannels(t, seq, set, filters, 100.0);
            const auto ch = tuple_channel(t, seq, set);
            for (const auto& s : subs) {
                o.require(s.sinr.mismatch_power == 0.0, "nonzero mismatch");
                o.require(s.sinr.leakage_power == 0.0, "nonzero leakage");
                const auto& f = filters[s.spec.receiver][s.spec.filter_id];
                const auto fe = f.entries(p.L);
                for (const auto& st : s.spec.streams) {
                    // Filter output of this stream through the true (representative) channel.
                    const auto v = set.vectors[st.k][st.index].entries(p.L);
                    cplx out = 0.0;
                    for (int l = 0; l < p.L; ++l) out += std::conj(fe[l]) * ch.D[s.spec.receiver * 2 + st.k][l] * v[l];
                    const double want = s.spec.beta * static_cast<double>(s.spec.coefficients[st.k]);
                    o.require(std::abs(out - want) <= kCoefficientRelTol * want, "coefficient differs from its integer");
                }
                if (p.mode == PatternMode::two_user && s.spec.receiver == 0 && s.spec.streams.size() == 2) {
                    o.require(s.spec.coefficients == std::vector<long long>{1, 1}, "receiver one coefficients not (1,1)");
                }
            }
        }
        if (p.mode == PatternMode::general) {
            for (long long power = 0; power < p.L; ++power) {
                const auto alpha = factor_fourier_power(power, p);
                long long back = 0;
                for (std::size_t i = 0; i < alpha.size(); ++i) {
                    o.require(alpha[i] >= 0 && alpha[i] <= p.I, "digit out of range");
                    back += alpha[i] * p.d[i];
                }
                o.require(back == power, fmt::format("factorization of {} fails", power));
            }
        }
    }
    const double secs = seconds_since(t0);
    o.require(secs < kAlignmentSeconds, fmt::format("runtime {:.1f} s", secs));
    if (o.pass) o.detail = fmt::format("runtime {:.2f} s", secs);
    return o;
}

Outcome criterion_sinr() {
    Outcome o;
    std::size_t checked = 0, violations = 0;
    auto run = [&](const MatchPattern& p, int nu, int tuples, std::uint64_t seed) {
        const QuantizerConfig qc(nu, p.L);
        CounterRng rng(stream_key(seed, StreamTag::synthetic));
        for (int i = 0; i < tuples; ++i) {
            const auto [t, seq] = synthesize_matched_tuple(rng, qc, p);
            const auto set = build_precoders(t.base_cells, qc, p);
            for (const auto& s : extract_subchannels(t, seq, set, build_all_filters(set), 100.0)) {
                ++checked;
                violations += s.sinr.empirical_sinr < s.sinr.theoretical_lower_bound;
            }
        }
    };
    run(MatchPattern::two_user(4), 64, 1000, 404);
    run(MatchPattern::general(2, 2), 256, 1000, 405);
    o.require(violations == 0, fmt::format("{} of {} subchannels below bound", violations, checked));
    if (o.pass) o.detail = fmt::format("{} subchannels, 0 violations", checked);
    return o;
}

Outcome criterion_codec() {
    Outcome o;
    // Noiseless: every coefficient pair and message pair at q = 3, one symbol.
    CodecConfig c;
    c.q = 3;
    c.n = 2;
    c.P = 4.0;
    c.seed = 505;
    for (long long a1 = -3; a1 <= 3; ++a1) {
        for (long long a2 = -3; a2 <= 3; ++a2) {
            if (a1 == 0 && a2 == 0) continue;
            SubchannelModel m;
            m.a = {a1, a2};
            for (int w1 = 0; w1 < 3; ++w1) {
                for (int w2 = 0; w2 < 3; ++w2) {
                    const std::vector<Dither> d{draw_dither(c, 0, w1 * 3 + w2), draw_dither(c, 1, w1 * 3 + w2)};
                    const auto x1 = encode({w1, 0}, d[0], c), x2 = encode({w2, 0}, d[1], c);
                    const auto u = decode_equation({double(a1) * x1[0] + double(a2) * x2[0]}, m, d, c);
                    o.require(u[0] == (((a1 * w1 + a2 * w2) % 3) + 3) % 3, "noiseless decode wrong");
                }
            }
        }
    }
    // AWGN sweep at a field size whose error rate is measurable across the whole range.
    std::vector<double> grid;
    for (double db = 10; db <= 30; db += 2) grid.push_back(db);
    const auto rows = codec_sweep(grid, 31, 2000, 100, 506);
    double prev = 1.0, worst = 1.0;
    for (const auto& r : rows) {
        o.require(r.error_rate <= prev, fmt::format("error rate rises at {} dB", r.sinr_db));
        prev = r.error_rate;
        const double ratio = std::max(r.error_rate / r.oracle, r.oracle / r.error_rate);
        worst = std::max(worst, ratio);
        o.require(ratio <= kCodecFactor, fmt::format("{} dB: rate {} vs oracle {}", r.sinr_db, r.error_rate, r.oracle));
    }
    if (o.pass) o.detail = fmt::format("worst oracle ratio {:.3f}", worst);
    return o;
}

Outcome criterion_function_system() {
    Outcome o;
    CounterRng rng(stream_key(606, StreamTag::synthetic));
    std::size_t systems = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        for (const auto& p : {MatchPattern::two_user(4), MatchPattern::general(2, 2)}) {
            const QuantizerConfig qc(64, p.L);
            const auto [t, seq] = synthesize_matched_tuple(rng, qc, p);
            const auto set = build_precoders(t.base_cells, qc, p);
            const auto subs = extract_subchannels(t, seq, set, build_all_filters(set), 100.0);
            const auto q = smallest_safe_prime(max_abs_coefficient(subs));
            const auto sys = target_equations(subs, set, q);
            std::vector<std::vector<std::int64_t>> rows;
            for (const auto& r : sys.rows) rows.push_back(r.coefficients);
            o.require(rank_oracle(rows, q) == sys.columns.size(), "rank deficient system");
            o.require(check_invertible(sys).invertible, "check_invertible disagrees");
            const auto sub = select_rows(sys, greedy_full_rank_rows(sys));
            std::vector<std::vector<std::int64_t>> w(sys.columns.size(), std::vector<std::int64_t>(2));
            for (auto& m : w) {
                for (auto& x : m) x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(q)));
            }
            o.require(recover_messages(sub, evaluate_rows(sub, w)) == w, "round trip failed");
            ++systems;
        }
    }
    if (o.pass) o.detail = fmt::format("{} systems full rank and recovered", systems);
    return o;
}

Outcome criterion_bounds() {
    Outcome o;
    const auto pg = per_gain_constant_mc(1000000, 707);
    o.require(std::abs(pg.value - kPerGainTarget) <= kPerGainTolerance,
              fmt::format("per-gain constant {}", pg.value));
    o.require(pg.value <= 1.5, "per-gain constant above 1.5");
    for (int K : {2, 3, 4}) {
        for (double P = 1.0; P <= 1e6; P *= 10) {
            const double closed = cutset_upper(K, P, CutsetMode::closed_form);
            o.require(closed <= cutset_relaxed(K, P), fmt::format("closed form above relaxed at K={}, P={}", K, P));
            const auto wf = waterfill(K, P);
            o.require(wf.rate <= closed, fmt::format("water-filling above closed form at K={}, P={}", K, P));
            o.require(wf.mu > 1.0 / (4.0 * K * P), fmt::format("mu below 1/4KP at K={}, P={}", K, P));
            const auto r = make_bound_report(K, P, 1);
            const auto [gap, cf] = gap_constants(K, 1);
            const double k = K;
            o.require(gap == 7 * k * k * k + 5 * k * std::log2(k), "gap formula");
            o.require(std::abs(r.upper - r.lower_raw - gap) <= kIdentityRelTol * gap, fmt::format("relaxed minus lower != gap at K={}, P={}", K, P));
            o.require(r.upper_exact - r.achievable_raw <= gap, fmt::format("total gap exceeded at K={}, P={}", K, P));
        }
    }
    if (o.pass) o.detail = fmt::format("per-gain constant {:.5f} +- {:.5f}", pg.value, pg.std_error);
    return o;
}

Outcome criterion_multilayer() {
    Outcome o;
    ExperimentConfig base;
    base.P = 1000.0;
    base.tuples = 20000;
    base.seed = 808;
    std::vector<LayerReport> layers;
    for (int D : {1, 2, 3}) {
        auto c = base;
        c.D = D;
        const auto r = run_multilayer(c);
        for (const auto& l : r.trials[0].layers) layers.push_back(l);
    }
    for (const auto& l : layers) {
        o.require(l.formula_rate == layers[0].formula_rate, "formula rates differ across depth");
        o.require(std::abs(l.empirical_rate - layers[0].empirical_rate) <= kDepthRateTolerance * layers[0].empirical_rate,
                  fmt::format("empirical rate {} vs {}", l.empirical_rate, layers[0].empirical_rate));
    }

    auto quiet = base;
    quiet.D = 3;
    quiet.tuples = 200;
    quiet.noiseless = true;
    quiet.representative_gains = true;
    const auto q = run_multilayer(quiet).trials[0];
    o.require(q.end_to_end_block_errors == 0 && q.blocks == quiet.tuples, "noiseless recovery not exact");

    auto noisy = base;
    noisy.D = 3;
    noisy.P = 1e7;
    noisy.L = 2;
    noisy.nu = 256;
    noisy.q = 7;
    noisy.tuples = 20;
    noisy.trials = 1000;
    noisy.bootstrap_resamples = 10;
    const auto r = run_multilayer(noisy);
    double e2e = 0.0, unions = 0.0;
    for (const auto& t : r.trials) {
        std::size_t sum = 0;
        for (const auto& l : t.layers) sum += l.block_errors;
        o.require(t.end_to_end_block_errors <= sum, "end-to-end errors exceed layer errors");
        e2e += t.end_to_end_error;
        unions += t.union_bound;
    }
    o.require(e2e <= unions, "mean end-to-end error above union bound");
    if (o.pass) {
        o.detail = fmt::format("depth-1 rate {:.4f}, all depths within tolerance; mean end-to-end error {:.4f} <= {:.4f}",
                               layers[0].empirical_rate, e2e / r.trials.size(), unions / r.trials.size());
    }
    return o;
}

Outcome criterion_determinism(const std::string& cli) {
    Outcome o;
    const std::vector<std::string> commands{
        "bounds --k 2,3 --p 1:1e4:log --d 1,2",
        "simulate --d 2 --p 100 --l 4 --nu 64 --tuples 100 --trials 3 --seed 7",
        "simulate --mode general --i 1 --nu 256 --tuples 20 --seed 7",
        "simulate --matching greedy --l 2 --nu 2 --t 20000 --seed 9",
        "codec --sinr-db 0:20:5 --q 5 --blocks 10",
        "match --k 2 --l 2 --nu 2 --t 2e4",
        "quantizer --nu 2 --l 2 --check-all",
    };
    const auto dir = testing::scratch_dir("determinism");
    for (const auto& cmd : commands) {
        std::map<std::string, std::string> first;
        for (int pass = 0; pass < 2; ++pass) {
            std::filesystem::remove_all(dir);
            const auto r = testing::run_cli(cli, cmd + " --out " + dir.string());
            o.require(r.exit_code == 0, fmt::format("'{}' exited with {}", cmd, r.exit_code));
            std::map<std::string, std::string> files;
            for (const auto& e : std::filesystem::directory_iterator(dir)) {
                files[e.path().filename().string()] = testing::read_file(e.path());
            }
            if (pass == 0) {
                first = files;
            } else {
                o.require(!files.empty() && files == first, fmt::format("'{}' artifacts differ", cmd));
            }
        }
    }
    std::filesystem::remove_all(dir);
    if (o.pass) o.detail = fmt::format("{} invocations byte-identical", commands.size());
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    int criterion = 0;
    std::string cli;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string key = argv[i];
        if (key == "--criterion") criterion = std::atoi(argv[i + 1]);
        else if (key == "--cli") cli = argv[i + 1];
    }
    const std::map<int, std::pair<const char*, std::function<Outcome()>>> table{
        {1, {"quantizer", criterion_quantizer}},
        {2, {"matching", criterion_matching}},
        {3, {"alignment", criterion_alignment}},
        {4, {"sinr bounds", criterion_sinr}},
        {5, {"codec", criterion_codec}},
        {6, {"function system", criterion_function_system}},
        {7, {"bounds", criterion_bounds}},
        {8, {"multilayer", criterion_multilayer}},
        {9, {"determinism", [&cli] { return criterion_determinism(cli); }}},
    };
    const auto it = table.find(criterion);
    if (it == table.end() || (criterion == 9 && cli.empty())) {
        std::cerr << "usage: acceptance --criterion 1..9 [--cli PATH]\n";
        return 2;
    }
    Outcome o;
    try {
        o = it->second.second();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = fmt::format("exception: {}", e.what());
    }
    std::cout << fmt::format("criterion {} ({}): {} - {}\n", criterion, it->second.first, o.pass ? "PASS" : "FAIL",
                             o.detail);
    return o.pass ? 0 : 1;
}
