#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "calign/matcher.hpp"

using namespace calign;

namespace {

GainSequence iid(int K, std::size_t T, std::uint64_t seed) {
    FadingConfig c;
    c.K = K;
    c.T = T;
    c.seed = seed;
    return generate_process(c);
}

GainSequence from_gains(int K, std::vector<cplx> gains) {
    FadingConfig c;
    c.K = K;
    c.T = gains.size() / (K * K);
    return GainSequence(c, std::move(gains));
}

// Floating-point route: rotating the base representative by omega_L^{(l) d} in the complex
// plane and re-quantizing must give the slot's cell.
bool complex_rotation_oracle(const MatchedTuple& t, const GainSequence& seq, const QuantizerConfig& qc,
                             const MatchPattern& p) {
    for (int l = 0; l < p.L; ++l) {
        for (int i = 0; i < p.K * p.K; ++i) {
            const double phase = 2 * std::numbers::pi * static_cast<double>((l * p.d[i]) % p.L) / p.L;
            const cplx expect = representative(t.base_cells[i], qc) * std::polar(1.0, phase);
            if (!(quantize(expect, qc) == quantize(seq.slot(t.slots[l])[i], qc))) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("pattern exponents") {
    const auto two = MatchPattern::two_user(3);
    CHECK(two.exponent(1, 0) == 1);
    CHECK(two.exponent(0, 0) == 0);
    CHECK(two.exponent(0, 1) == 0);
    CHECK(two.exponent(1, 1) == 0);
    const auto g = MatchPattern::general(2, 1);
    CHECK(g.L == 16);
    // (I+1)^{(k-1)K + m-1} with one-based (m, k): d11 = 1, d21 = 2, d12 = 4, d22 = 8.
    CHECK(g.exponent(0, 0) == 1);
    CHECK(g.exponent(1, 0) == 2);
    CHECK(g.exponent(0, 1) == 4);
    CHECK(g.exponent(1, 1) == 8);
    CHECK(MatchPattern::general(2, 2).L == 81);
    CHECK_THROWS_AS(general_subblock_count(2, 0), ConfigError);
    CHECK_THROWS_AS(general_subblock_count(6, 3), ConfigError);
}

TEST_CASE("L = 1 matches every finite slot") {
    const QuantizerConfig qc(2, 1);
    const auto seq = iid(2, 5000, 1);
    const auto r = match(seq, qc, MatchPattern::two_user(1));
    std::size_t finite = 0;
    for (std::size_t t = 0; t < seq.T(); ++t) finite += !has_infinity(quantize_slot(seq, t, qc));
    CHECK(r.tuples.size() == finite);
    CHECK(r.matched_fraction == doctest::Approx(double(finite) / seq.T()));
    CHECK(r.delta_matrix == doctest::Approx(1.0 - double(finite) / seq.T()));
}

TEST_CASE("greedy matching invariants for two users") {
    const QuantizerConfig qc(2, 2);
    const auto p = MatchPattern::two_user(2);
    const auto seq = iid(2, 40001, 2);
    const auto r = match(seq, qc, p);
    CHECK(r.T_used == 40000);
    CHECK(r.tuples.size() > 0);
    CHECK(verify_matching(r, seq, qc, p));
    std::set<std::size_t> used;
    for (const auto& t : r.tuples) {
        CHECK(t.slots.size() == 2u);
        CHECK(t.slots[0] < 20000);
        CHECK(t.slots[1] >= 20000);
        CHECK(t.slots[1] < 40000);
        CHECK_FALSE(has_infinity(t.base_cells));
        CHECK(complex_rotation_oracle(t, seq, qc, p));
        for (auto s : t.slots) CHECK(used.insert(s).second);
    }
    for (std::size_t i = 1; i < r.tuples.size(); ++i) CHECK(r.tuples[i - 1].slots[0] < r.tuples[i].slots[0]);
    CHECK(r.matched_fraction == doctest::Approx(2.0 * r.tuples.size() / 40001.0));
}

TEST_CASE("greedy first-fit picks the earliest admissible partner") {
    const QuantizerConfig qc(2, 2);
    const auto p = MatchPattern::two_user(2);
    const auto seq = iid(2, 2000, 3);
    const auto r = match(seq, qc, p);
    // Replay: for each tuple in order, the partner must be the first unused slot of block 2 that
    // carries the rotated base matrix.
    std::set<std::size_t> used;
    for (const auto& t : r.tuples) {
        const auto want = rotate_matrix(t.base_cells, p, 1, qc);
        std::size_t first = 0;
        for (std::size_t s = 1000; s < 2000; ++s) {
            if (!used.count(s) && quantize_slot(seq, s, qc) == want) {
                first = s;
                break;
            }
        }
        CHECK(t.slots[1] == first);
        used.insert(t.slots[1]);
    }
}

TEST_CASE("verifier rejects tampered tuples") {
    const QuantizerConfig qc(2, 2);
    const auto p = MatchPattern::two_user(2);
    const auto seq = iid(2, 20000, 4);
    auto r = match(seq, qc, p);
    REQUIRE(r.tuples.size() >= 2);
    auto bad = r;
    bad.tuples[0].slots[1] = bad.tuples[1].slots[1];
    CHECK_FALSE(verify_matching(bad, seq, qc, p));
    auto moved = r;
    moved.tuples[0].base_cells[0] = rotate(moved.tuples[0].base_cells[0], 1, qc);
    CHECK_FALSE(verify_tuple(moved.tuples[0], seq, qc, p));
}

TEST_CASE("general pattern matches a planted tuple exactly") {
    const QuantizerConfig qc(2, 16);
    const auto p = MatchPattern::general(2, 1);
    CounterRng rng(stream_key(5, StreamTag::synthetic));
    const auto [tuple, planted] = synthesize_matched_tuple(rng, qc, p);
    // Embed slot l of the planted tuple at the start of subblock l of a longer sequence whose
    // other slots are far outside the quantizer range.
    const std::size_t per = 3;
    std::vector<cplx> gains(16 * per * 4, cplx(50.0, 0.0));
    for (int l = 0; l < 16; ++l) {
        for (int i = 0; i < 4; ++i) gains[(l * per + 1) * 4 + i] = planted.slot(l)[i];
    }
    const auto seq = from_gains(2, gains);
    const auto r = match(seq, qc, p);
    REQUIRE(r.tuples.size() == 1);
    CHECK(r.tuples[0].base_cells == tuple.base_cells);
    CHECK(verify_tuple(r.tuples[0], seq, qc, p));
    CHECK(complex_rotation_oracle(r.tuples[0], seq, qc, p));
    for (int l = 0; l < 16; ++l) CHECK(r.tuples[0].slots[l] == l * per + 1);
}

TEST_CASE("synthetic tuples satisfy the rotation conditions") {
    for (const auto& [p, nu] : {std::pair{MatchPattern::two_user(4), 64}, std::pair{MatchPattern::general(2, 2), 8}}) {
        const QuantizerConfig qc(nu, p.L);
        CounterRng rng(stream_key(6, StreamTag::synthetic));
        for (int i = 0; i < 50; ++i) {
            const auto [t, seq] = synthesize_matched_tuple(rng, qc, p);
            CHECK(verify_tuple(t, seq, qc, p));
            CHECK(complex_rotation_oracle(t, seq, qc, p));
            CHECK_FALSE(has_infinity(t.base_cells));
        }
    }
}

TEST_CASE("representative tuples carry exact representatives") {
    const QuantizerConfig qc(4, 3);
    const auto p = MatchPattern::two_user(3);
    CounterRng rng(stream_key(7, StreamTag::synthetic));
    const auto base = synthesize_matched_tuple(rng, qc, p).first.base_cells;
    const auto [t, seq] = representative_tuple(base, qc, p);
    CHECK(verify_tuple(t, seq, qc, p));
    for (int l = 0; l < 3; ++l) {
        const auto cells = rotate_matrix(base, p, l, qc);
        for (int i = 0; i < 4; ++i) CHECK(seq.slot(l)[i] == representative(cells[i], qc));
    }
}

TEST_CASE("typicality on a constant channel passes") {
    const QuantizerConfig qc(2, 2);
    const auto seq = from_gains(2, std::vector<cplx>(4 * 1000, cplx(0.7, 0.2)));
    for (double eta : {0.01, 0.5, 0.99}) {
        const auto rep = check_typicality(seq, qc, 2, eta);
        CHECK(rep.pass);
        CHECK(rep.distinct_matrices == 1u);
        CHECK(rep.min_ratio == doctest::Approx(1.0));
    }
}

TEST_CASE("typicality fails when a matrix is confined to one subblock") {
    const QuantizerConfig qc(2, 2);
    std::vector<cplx> g(4 * 1000, cplx(0.7, 0.2));
    for (std::size_t t = 0; t < 100; ++t) {
        for (int i = 0; i < 4; ++i) g[t * 4 + i] = cplx(0.1, 0.1);
    }
    const auto rep = check_typicality(from_gains(2, g), qc, 2, 0.2);
    CHECK_FALSE(rep.pass);
    CHECK(rep.violations >= 1u);
    CHECK(rep.min_ratio == 0.0);
}

TEST_CASE("typicality on an iid process over a small alphabet") {
    // Each gain is one of three points in distinct cells, so there are 3^4 matrices and
    // every one has an expected per-subblock count in the thousands.
    const QuantizerConfig qc(2, 2);
    const std::vector<cplx> points{{0.3, 0.1}, {-0.9, 0.4}, {0.2, -1.7}};
    CounterRng rng(stream_key(8, StreamTag::monte_carlo));
    std::vector<cplx> g(4 * 200000);
    for (auto& x : g) x = points[rng.below(3)];
    const double eta = 0.2;
    const auto rep = check_typicality(from_gains(2, g), qc, 2, eta);
    CHECK(rep.distinct_matrices == 81u);
    CHECK(rep.violations == 0u);
    CHECK(rep.pass);
    CHECK(rep.min_ratio > 1.0 - eta);
    for (const auto& [key, counts] : rep.counts) {
        const double expected = (counts[0] + counts[1]) / 2.0;
        for (auto c : counts) CHECK(c >= (1.0 - eta) * expected);
    }
}

TEST_CASE("typicality on iid Rayleigh at nu = 2 flags only rare matrices") {
    const QuantizerConfig qc(2, 2);
    const auto seq = iid(2, 200000, 8);
    const auto rep = check_typicality(seq, qc, 2, 0.2);
    CHECK(rep.pass == (rep.violations == 0));
    CHECK(rep.distinct_matrices == rep.counts.size());
    // With about 10^6 possible matrices most occur a handful of times, so a failed check
    // here reflects sampling noise rather than non-stationarity.
    for (const auto& [key, counts] : rep.counts) CHECK(counts[0] + counts[1] < 400u);
}

TEST_CASE("exact typicality needs every matrix in every subblock") {
    const QuantizerConfig qc(2, 1);
    const auto seq = iid(2, 20000, 9);
    const auto exact = check_typicality_exact(seq, qc, 1, 0.5);
    CHECK_FALSE(exact.pass);  // 17^4 matrices cannot all appear in 20000 slots
    CHECK(exact.min_ratio == 0.0);
}

TEST_CASE("match rejects inconsistent inputs") {
    const auto seq = iid(2, 100, 10);
    CHECK_THROWS_AS(match(seq, QuantizerConfig(2, 3), MatchPattern::two_user(2)), ConfigError);
    CHECK_THROWS_AS(match(iid(3, 100, 10), QuantizerConfig(2, 2), MatchPattern::two_user(2)), ConfigError);
}
