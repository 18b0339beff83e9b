#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "calign/function_system.hpp"

using namespace calign;

namespace {

using Matrix = std::vector<std::vector<std::int64_t>>;

// Exhaustive oracle: the map w -> A w over Z_q^n is injective iff no two message vectors collide.
bool injective_by_enumeration(const Matrix& A, std::int64_t q) {
    const std::size_t n = A[0].size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(q);
    std::set<std::vector<std::int64_t>> images;
    std::vector<std::int64_t> w(n, 0);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (auto& x : w) {
            x = static_cast<std::int64_t>(c % q);
            c /= q;
        }
        std::vector<std::int64_t> img;
        for (const auto& row : A) {
            std::int64_t s = 0;
            for (std::size_t j = 0; j < n; ++j) s = (s + row[j] * w[j]) % q;
            img.push_back(s);
        }
        if (!images.insert(img).second) return false;
    }
    return true;
}

std::vector<StreamRef> plain_columns(std::size_t n) {
    std::vector<StreamRef> cols;
    for (std::size_t i = 0; i < n; ++i) cols.push_back({0, static_cast<int>(i)});
    return cols;
}

struct Emitted {
    TransmitVectorSet set;
    std::vector<Subchannel> subs;
};

Emitted emit(CounterRng& rng, const MatchPattern& p, int nu) {
    const QuantizerConfig qc(nu, p.L);
    auto [t, seq] = synthesize_matched_tuple(rng, qc, p);
    auto set = build_precoders(t.base_cells, qc, p);
    auto subs = extract_subchannels(t, seq, set, build_all_filters(set), 100.0);
    return {std::move(set), std::move(subs)};
}

}  // namespace

TEST_CASE("primes") {
    CHECK(is_prime(2));
    CHECK(is_prime(101));
    CHECK_FALSE(is_prime(1));
    CHECK_FALSE(is_prime(91));
    CHECK(smallest_safe_prime(1) == 3);
    CHECK(smallest_safe_prime(2) == 5);
    CHECK(smallest_safe_prime(5) == 11);
    CHECK(smallest_safe_prime(7) == 17);
}

TEST_CASE("modular example: sum row and singleton") {
    const auto sys = make_system(5, plain_columns(2), {{1, 1}, {1, 0}});
    const auto vals = evaluate_rows(sys, {{2}, {4}});
    CHECK(vals[0] == std::vector<std::int64_t>{1});
    const auto w = recover_messages(sys, vals);
    CHECK(w[0] == std::vector<std::int64_t>{2});
    CHECK(w[1] == std::vector<std::int64_t>{4});
    const auto zero = recover_messages(sys, {{0, 0}, {0, 0}});
    CHECK(zero[0] == std::vector<std::int64_t>{0, 0});
    CHECK(zero[1] == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("duplicate rows are rank deficient") {
    const auto sys = make_system(7, plain_columns(3), {{1, 2, 3}, {1, 2, 3}, {2, 4, 6}});
    const auto r = check_invertible(sys);
    CHECK_FALSE(r.invertible);
    CHECK(r.rank == 1);
    CHECK_THROWS_AS(recover_messages(sys, {{0}, {0}, {0}}), DomainError);
}

TEST_CASE("rank agrees with exhaustive solvability mod 7") {
    CounterRng rng(stream_key(11, StreamTag::monte_carlo));
    int full = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(4);
        Matrix A(n, std::vector<std::int64_t>(n));
        for (auto& row : A) {
            for (auto& x : row) x = static_cast<std::int64_t>(rng.below(7));
        }
        // Force some singular cases.
        if (n > 1 && trial % 5 == 0) A[n - 1] = A[0];
        const auto sys = make_system(7, plain_columns(n), A);
        const bool expect = injective_by_enumeration(A, 7);
        CHECK(check_invertible(sys).invertible == expect);
        full += expect;
    }
    CHECK(full > 50);
}

TEST_CASE("inconsistent values raise an integrity error") {
    const auto sys = make_system(5, plain_columns(2), {{1, 1}, {1, 0}, {0, 1}});
    CHECK_NOTHROW(recover_messages(sys, {{1}, {2}, {4}}));
    CHECK_THROWS_AS(recover_messages(sys, {{1}, {2}, {3}}), DecodeIntegrityError);
}

TEST_CASE("round trip over random invertible systems") {
    CounterRng rng(stream_key(12, StreamTag::monte_carlo));
    int done = 0;
    while (done < 1000) {
        const std::int64_t q = std::vector<std::int64_t>{3, 5, 7, 11, 101}[rng.below(5)];
        const std::size_t n = 1 + rng.below(6);
        const std::size_t R = n + rng.below(3);
        Matrix A(R, std::vector<std::int64_t>(n));
        for (auto& row : A) {
            for (auto& x : row) x = static_cast<std::int64_t>(rng.below(q)) - q / 2;
        }
        const auto sys = make_system(q, plain_columns(n), A);
        if (!check_invertible(sys).invertible) continue;
        Matrix w(n, std::vector<std::int64_t>(3));
        for (auto& m : w) {
            for (auto& x : m) x = static_cast<std::int64_t>(rng.below(q));
        }
        REQUIRE(recover_messages(sys, evaluate_rows(sys, w)) == w);
        ++done;
    }
}

TEST_CASE("modulus validation") {
    CHECK_THROWS_AS(make_system(6, plain_columns(1), {{1}}), ModulusError);
    CounterRng rng(stream_key(13, StreamTag::synthetic));
    const auto e = emit(rng, MatchPattern::two_user(4), 64);
    const auto m = max_abs_coefficient(e.subs);
    CHECK(m >= 1);
    CHECK_THROWS_AS(target_equations(e.subs, e.set, 4), ModulusError);
    // A prime dividing some coefficient is rejected.
    for (const auto& s : e.subs) {
        for (auto a : s.spec.coefficients) {
            if (a > 1 && is_prime(a)) CHECK_THROWS_AS(target_equations(e.subs, e.set, a), ModulusError);
        }
    }
    CHECK_NOTHROW(target_equations(e.subs, e.set, smallest_safe_prime(m)));
}

TEST_CASE("two-user system: structure and alternating peel order") {
    CounterRng rng(stream_key(14, StreamTag::synthetic));
    for (int L : {2, 3, 4, 8}) {
        const auto e = emit(rng, MatchPattern::two_user(L), 64);
        const auto q = smallest_safe_prime(max_abs_coefficient(e.subs));
        const auto sys = target_equations(e.subs, e.set, q);
        CHECK(sys.columns.size() == static_cast<std::size_t>(2 * L - 1));
        CHECK(sys.rows.size() == static_cast<std::size_t>(2 * L - 1));
        for (const auto& r : sys.rows) {
            if (r.receiver == 0) {
                for (auto a : r.coefficients) CHECK((a == 0 || a == 1));
            }
        }
        const auto rep = check_invertible(sys);
        CHECK(rep.invertible);
        REQUIRE(rep.chain);
        REQUIRE(rep.peel_order.size() == static_cast<std::size_t>(2 * L - 1));
        CHECK(rep.peel_order[0] == StreamRef{0, L - 1});
        for (int i = 1; i < 2 * L - 1; ++i) {
            // w_{2,L-1}, w_{1,L-1}, w_{2,L-2}, ... (zero-based indices)
            const StreamRef want = i % 2 == 1 ? StreamRef{1, L - 1 - (i + 1) / 2} : StreamRef{0, L - 1 - i / 2};
            CHECK(rep.peel_order[i] == want);
        }
    }
}

TEST_CASE("emitted systems are full rank under both modes") {
    CounterRng rng(stream_key(15, StreamTag::synthetic));
    for (int trial = 0; trial < 50; ++trial) {
        for (const auto& p : {MatchPattern::two_user(4), MatchPattern::general(2, 1), MatchPattern::general(2, 2)}) {
            const auto e = emit(rng, p, 64);
            const auto q = p.mode == PatternMode::general ? 101 : smallest_safe_prime(max_abs_coefficient(e.subs));
            const auto sys = target_equations(e.subs, e.set, q);
            std::vector<std::vector<std::int64_t>> rows;
            for (const auto& r : sys.rows) rows.push_back(r.coefficients);
            CHECK(rank_mod_q(rows, q) == sys.columns.size());
            const auto pick = greedy_full_rank_rows(sys);
            CHECK(pick.size() == sys.columns.size());
            const auto sub = select_rows(sys, pick);
            CHECK(check_invertible(sub).invertible);
            std::vector<std::vector<std::int64_t>> w(sys.columns.size(), std::vector<std::int64_t>(2));
            for (auto& m : w) {
                for (auto& x : m) x = static_cast<std::int64_t>(rng.below(q));
            }
            CHECK(recover_messages(sub, evaluate_rows(sub, w)) == w);
        }
    }
}
