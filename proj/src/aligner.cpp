#include "calign/aligner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include <fmt/core.h>

#include "calign/kernels/kernels.hpp"

namespace calign {

Rational Rational::make(long long num, long long den) {
    if (num <= 0 || den <= 0) {
        throw DomainError(fmt::format("Rational: {}/{} is not positive", num, den));
    }
    const long long g = std::gcd(num, den);
    return {num / g, den / g};
}

Rational Rational::operator*(const Rational& o) const {
    // Cross-cancel first to keep intermediate products small.
    const long long g1 = std::gcd(num, o.den);
    const long long g2 = std::gcd(o.num, den);
    long long n, d;
    if (__builtin_mul_overflow(num / g1, o.num / g2, &n) ||
        __builtin_mul_overflow(den / g2, o.den / g1, &d)) {
        throw NumericError("Rational: product overflows 64 bits");
    }
    return make(n, d);
}

Rational Rational::operator/(const Rational& o) const { return *this * Rational{o.den, o.num}; }

std::string Rational::to_string() const {
    return den == 1 ? fmt::format("{}", num) : fmt::format("{}/{}", num, den);
}

Rational select_normalizer(double y) {
    if (!(y > 0.0) || !std::isfinite(y)) {
        throw DomainError(fmt::format("select_normalizer: magnitude {} must be positive and finite", y));
    }
    if (y >= 1.0 && y < 2.0) return {1, 1};
    if (y < 1.0) {
        // n*y in [1,2): the smallest n with n*y >= 1 also has n*y < 1 + y < 2.
        long long n = static_cast<long long>(std::ceil(1.0 / y));
        while (n > 1 && (n - 1) * y >= 1.0) --n;
        while (n * y < 1.0) ++n;
        return {n, 1};
    }
    // y/n in [1,2): the smallest n with y/n < 2.
    long long n = static_cast<long long>(std::floor(y / 2.0)) + 1;
    while (n > 1 && y / (n - 1) < 2.0) --n;
    while (y / n >= 2.0) ++n;
    return {1, n};
}

namespace {

cplx ipow(cplx z, long long e) {
    cplx r = 1.0;
    const cplx base = e < 0 ? 1.0 / z : z;
    for (long long i = 0; i < std::llabs(e); ++i) r *= base;
    return r;
}

long long mod(long long a, long long m) { return ((a % m) + m) % m; }

cplx root_of_unity(long long p, int L) {
    return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(mod(p, L)) / L);
}

cplx monomial(const std::vector<cplx>& h, const std::vector<long long>& alpha) {
    cplx r = 1.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (alpha[i] != 0) r *= ipow(h[i], alpha[i]);
    }
    return r;
}

TransmitVectorSet base_set(const CellMatrix& base_cells, const QuantizerConfig& qc,
                           const MatchPattern& pattern) {
    pattern.validate();
    if (static_cast<int>(base_cells.size()) != pattern.K * pattern.K) {
        throw ConfigError("precoders: base cell matrix must be K x K");
    }
    TransmitVectorSet set;
    set.pattern = pattern;
    set.qc = qc;
    set.base_cells = base_cells;
    for (const auto& cell : base_cells) {
        if (cell.is_infinity()) throw DomainError("precoders: base cell at infinity");
        const cplx h = representative(cell, qc);
        if (std::abs(h) == 0.0) throw DomainError("precoders: degenerate zero-magnitude representative");
        set.h_hat.push_back(h);
        set.c *= conditioning(h);
    }
    return set;
}

}  // namespace

double TransmitVector::norm(int L) const { return std::abs(rho) * std::sqrt(static_cast<double>(L)); }

std::vector<cplx> TransmitVector::entries(int L) const {
    std::vector<cplx> v(L);
    for (int l = 0; l < L; ++l) v[l] = rho * root_of_unity(fourier_power * l, L);
    return v;
}

std::size_t TransmitVectorSet::stream_count() const {
    std::size_t n = 0;
    for (const auto& per_k : vectors) n += per_k.size();
    return n;
}

double TransmitVectorSet::per_stream_power(double P) const {
    if (pattern.mode == PatternMode::two_user) return P / (4.0 * L() * c * c);
    return P / (std::pow(4.0, K() * K()) * L());
}

double TransmitVectorSet::max_norm2() const {
    if (pattern.mode == PatternMode::two_user) return 4.0 * L() * c * c;
    return std::pow(4.0, K() * K()) * L();
}

TransmitVectorSet build_precoders_k2(const CellMatrix& base_cells, const QuantizerConfig& qc, int L) {
    if (L < 2) throw ConfigError(fmt::format("build_precoders_k2: L must be at least 2, got {}", L));
    TransmitVectorSet set = base_set(base_cells, qc, MatchPattern::two_user(L));
    const auto& h = set.h_hat;
    // h index: 0 = (1,1), 1 = (1,2), 2 = (2,1), 3 = (2,2)
    const cplx ratio = h[3] * h[0] / (h[2] * h[1]);

    set.vectors.assign(2, {});
    TransmitVector v;
    v.owner = 0;
    v.index = 0;
    v.alpha = {0, 0, 0, 0};
    v.rho = 1.0;
    v.fourier_power = 0;
    set.vectors[0].push_back(v);
    for (int l = 2; l <= L; ++l) {
        TransmitVector next = set.vectors[0].back();
        const Rational b = select_normalizer(std::abs(next.rho * ratio));
        next.index = l - 1;
        next.alpha = {l - 1, -(l - 1), -(l - 1), l - 1};
        next.normalizers.push_back(b);
        next.scale *= b.value();
        next.rho = next.rho * ratio * b.value();
        next.fourier_power = mod(-(l - 1), L);
        set.vectors[0].push_back(next);
    }
    for (int l = 1; l <= L - 1; ++l) {
        TransmitVector w = set.vectors[0][l - 1];
        w.owner = 1;
        w.index = l - 1;
        w.alpha[0] += 1;
        w.alpha[1] -= 1;
        w.rho = w.rho * h[0] / h[1];
        set.vectors[1].push_back(w);
    }
    return set;
}

TransmitVectorSet build_precoders_general(const CellMatrix& base_cells, const QuantizerConfig& qc,
                                          int K, int I) {
    TransmitVectorSet set = base_set(base_cells, qc, MatchPattern::general(K, I));
    const int KK = K * K;
    // Normalizers up to exponent I so that received directions with an exponent
    // of I still have a defined normalizer product.
    std::vector<std::vector<double>> cumulative(KK, std::vector<double>(I + 1, 1.0));
    set.b_table.assign(KK, {});
    for (int i = 0; i < KK; ++i) {
        const double mag = std::abs(set.h_hat[i]);
        double B = 1.0;
        for (int a = 1; a <= I; ++a) {
            const Rational b = select_normalizer(B * std::pow(mag, a));
            set.b_table[i].push_back(b);
            B *= b.value();
            cumulative[i][a] = B;
        }
    }

    long long count = 1;
    for (int i = 0; i < KK; ++i) count *= I;
    set.vectors.assign(K, {});
    for (int k = 0; k < K; ++k) {
        for (long long idx = 0; idx < count; ++idx) {
            TransmitVector v;
            v.owner = k;
            v.index = static_cast<int>(idx);
            v.alpha.assign(KK, 0);
            // Digit j of idx in base I is the exponent of the gain with d = (I+1)^j.
            long long rest = idx;
            for (int j = 0; j < KK; ++j) {
                const int m = j % K, kk = j / K;
                v.alpha[m * K + kk] = rest % I;
                rest /= I;
            }
            for (int i = 0; i < KK; ++i) {
                for (long long a = 1; a <= v.alpha[i]; ++a) v.normalizers.push_back(set.b_table[i][a - 1]);
                v.scale *= cumulative[i][v.alpha[i]];
                v.fourier_power += v.alpha[i] * set.pattern.d[i];
            }
            v.rho = v.scale * monomial(set.h_hat, v.alpha);
            set.vectors[k].push_back(std::move(v));
        }
    }
    return set;
}

TransmitVectorSet build_precoders(const CellMatrix& base_cells, const QuantizerConfig& qc,
                                  const MatchPattern& pattern) {
    if (pattern.mode == PatternMode::two_user) return build_precoders_k2(base_cells, qc, pattern.L);
    return build_precoders_general(base_cells, qc, pattern.K, pattern.I);
}

std::vector<long long> factor_fourier_power(long long power, const MatchPattern& pattern) {
    if (pattern.mode != PatternMode::general) {
        throw ConfigError("factor_fourier_power: only defined for the general pattern");
    }
    const int K = pattern.K;
    std::vector<long long> alpha(K * K, 0);
    long long rest = power;
    for (int j = 0; j < K * K; ++j) {
        alpha[(j % K) * K + j / K] = rest % (pattern.I + 1);
        rest /= pattern.I + 1;
    }
    return alpha;
}

std::vector<cplx> MatchedFilter::entries(int L) const {
    std::vector<cplx> v(L);
    const double inv = 1.0 / std::sqrt(static_cast<double>(L));
    for (int l = 0; l < L; ++l) v[l] = phase * root_of_unity(fourier_power * l, L) * inv;
    return v;
}

std::vector<MatchedFilter> build_matched_filters(const TransmitVectorSet& precoders, int receiver) {
    const int K = precoders.K();
    const int L = precoders.L();
    const auto& pattern = precoders.pattern;
    if (receiver < 0 || receiver >= K) {
        throw ConfigError(fmt::format("build_matched_filters: receiver {} out of range", receiver));
    }
    std::map<long long, MatchedFilter> groups;
    for (int k = 0; k < K; ++k) {
        const int mk = receiver * K + k;
        for (const auto& v : precoders.vectors[k]) {
            const long long p = mod(v.fourier_power + pattern.d[mk], L);
            std::vector<long long> received = v.alpha;
            received[mk] += 1;
            auto [it, inserted] = groups.try_emplace(p);
            MatchedFilter& f = it->second;
            if (inserted) {
                f.receiver = receiver;
                f.fourier_power = p;
                const cplx g = precoders.h_hat[mk] * v.rho;
                f.phase = g / std::abs(g);
                f.exponents = received;
            } else if (f.exponents != received) {
                throw NumericError("build_matched_filters: streams share a direction but not a monomial");
            }
            f.aligned.push_back({k, v.index});
        }
    }

    std::vector<MatchedFilter> filters;
    for (auto& [p, f] : groups) {
        if (pattern.mode == PatternMode::two_user && receiver == 1 && f.aligned.size() == 1 &&
            f.aligned[0] == StreamRef{0, 0}) {
            continue;
        }
        filters.push_back(std::move(f));
    }

    if (pattern.mode == PatternMode::two_user) {
        // Filter j follows the anchor vector: v_{1,j} at receiver 1, v_{2,j} at receiver 2.
        const int anchor = receiver == 0 ? 0 : 1;
        auto anchor_index = [&](const MatchedFilter& f) {
            for (const auto& s : f.aligned) {
                if (s.k == anchor) return s.index;
            }
            throw NumericError("build_matched_filters: two-user filter without anchor stream");
        };
        std::sort(filters.begin(), filters.end(), [&](const auto& a, const auto& b) {
            return anchor_index(a) < anchor_index(b);
        });
        for (auto& f : filters) {
            const int j = anchor_index(f);
            for (const auto& s : f.aligned) {
                if (receiver == 0) {
                    f.ratios.push_back({1, 1});
                } else if (s.k == 0) {
                    // v_{1,j+1} arrives as b_{j+1} times the v_{2,j} direction.
                    f.ratios.push_back(precoders.vectors[0][s.index].normalizers.back());
                    if (s.index != j + 1) throw NumericError("build_matched_filters: misaligned stream");
                } else {
                    f.ratios.push_back({1, 1});
                }
            }
        }
    } else {
        for (auto& f : filters) {
            for (const auto& s : f.aligned) {
                const int mk = receiver * K + s.k;
                const Rational b = precoders.b_table[mk][f.exponents[mk] - 1];
                f.ratios.push_back({b.den, b.num});
            }
        }
    }
    for (std::size_t i = 0; i < filters.size(); ++i) filters[i].id = static_cast<int>(i);
    return filters;
}

std::vector<std::vector<MatchedFilter>> build_all_filters(const TransmitVectorSet& precoders) {
    std::vector<std::vector<MatchedFilter>> all;
    for (int m = 0; m < precoders.K(); ++m) all.push_back(build_matched_filters(precoders, m));
    return all;
}

double sinr_lower_bound(double c, double P, int L, double nu, int K, ReceiverCase which) {
    if (!(c >= 1.0)) throw DomainError(fmt::format("sinr_lower_bound: c = {} must be >= 1", c));
    if (!(P > 0.0)) throw DomainError(fmt::format("sinr_lower_bound: P = {} must be positive", P));
    const double pi1 = std::numbers::pi + 1.0;
    const double denom = std::isinf(nu) ? 1.0 : 1.0 + 2.0 * L * L * pi1 * pi1 * P / (nu * nu);
    switch (which) {
        case ReceiverCase::k2_receiver1: return P / (4.0 * std::pow(c, 4)) / denom;
        case ReceiverCase::k2_receiver2: return P / (16.0 * std::pow(c, 6)) / denom;
        case ReceiverCase::general: return P / (std::pow(2.0, 4 * K + 2 * K * K) * std::pow(c, 4));
    }
    return 0.0;
}

TupleChannel tuple_channel(const MatchedTuple& tuple, const GainSequence& seq,
                           const TransmitVectorSet& precoders) {
    const int K = precoders.K();
    const int L = precoders.L();
    if (static_cast<int>(tuple.slots.size()) != L) throw ConfigError("tuple_channel: tuple size differs from L");
    TupleChannel ch;
    ch.K = K;
    ch.L = L;
    ch.D.assign(K * K, std::vector<cplx>(L));
    ch.D_hat.assign(K * K, std::vector<cplx>(L));
    for (int l = 0; l < L; ++l) {
        const CellMatrix cells = rotate_matrix(tuple.base_cells, precoders.pattern, l, precoders.qc);
        for (int m = 0; m < K; ++m) {
            for (int k = 0; k < K; ++k) {
                ch.D[m * K + k][l] = seq.at(tuple.slots[l], m, k);
                ch.D_hat[m * K + k][l] = representative(cells[m * K + k], precoders.qc);
            }
        }
    }
    return ch;
}

std::vector<Subchannel> extract_subchannels(const MatchedTuple& tuple, const GainSequence& seq,
                                            const TransmitVectorSet& precoders,
                                            const std::vector<std::vector<MatchedFilter>>& filters,
                                            double P) {
    const auto& kt = kernels::active();
    const int K = precoders.K();
    const int L = precoders.L();
    const TupleChannel ch = tuple_channel(tuple, seq, precoders);
    const double Pt = precoders.per_stream_power(P);
    const double pi1 = std::numbers::pi + 1.0;
    const double nu = precoders.qc.nu;
    const double gamma2 = L * pi1 * pi1 / (nu * nu) * precoders.max_norm2();
    const std::size_t n_streams = precoders.stream_count();

    // Upsilon_{m,k} v for every stream, per receiver.
    std::vector<Subchannel> out;
    std::vector<cplx> residual(L);
    for (int m = 0; m < K; ++m) {
        std::vector<std::vector<std::vector<cplx>>> ups(K);
        for (int k = 0; k < K; ++k) {
            const int mk = m * K + k;
            for (const auto& v : precoders.vectors[k]) {
                const auto e = v.entries(L);
                for (int l = 0; l < L; ++l) residual[l] = (ch.D[mk][l] - ch.D_hat[mk][l]) * e[l];
                ups[k].push_back(residual);
            }
        }
        const ReceiverCase which = precoders.pattern.mode == PatternMode::general
                                       ? ReceiverCase::general
                                       : (m == 0 ? ReceiverCase::k2_receiver1 : ReceiverCase::k2_receiver2);

        for (const auto& f : filters[m]) {
            Subchannel sc;
            SubchannelSpec& spec = sc.spec;
            spec.receiver = m;
            spec.filter_id = f.id;
            spec.filter_power = f.fourier_power;
            spec.coefficients.assign(K, 0);
            spec.gamma2 = gamma2;
            const auto fe = f.entries(L);

            if (f.aligned.empty()) {
                spec.flagged = true;
            } else {
                long long lcm = 1;
                for (const auto& r : f.ratios) lcm = std::lcm(lcm, r.den);
                spec.post_scale = {lcm, 1};
                double beta_ref = -1.0;
                for (std::size_t i = 0; i < f.aligned.size(); ++i) {
                    const StreamRef s = f.aligned[i];
                    const Rational a = f.ratios[i] * spec.post_scale;
                    if (!a.is_integer()) throw NumericError("extract_subchannels: non-integer coefficient");
                    spec.coefficients[s.k] = a.num;
                    spec.streams.push_back(s);
                    // Received gain |h_hat rho| sqrt(L) along the unit filter.
                    const auto& v = precoders.vectors[s.k][s.index];
                    const double gain = std::abs(precoders.h_hat[m * K + s.k] * v.rho) * std::sqrt(double(L));
                    const double beta = gain / static_cast<double>(a.num);
                    if (beta_ref < 0.0) {
                        beta_ref = beta;
                    } else if (std::abs(beta - beta_ref) > 1e-9 * beta_ref) {
                        throw NumericError(fmt::format(
                            "extract_subchannels: inconsistent scale {} vs {} at receiver {}", beta,
                            beta_ref, m));
                    }
                }
                spec.beta = beta_ref;
            }

            SinrDecomposition& d = sc.sinr;
            std::size_t n_aligned = 0;
            for (int k = 0; k < K; ++k) {
                for (std::size_t i = 0; i < ups[k].size(); ++i) {
                    const cplx e = kt.cdot(fe.data(), ups[k][i].data(), L);
                    const double e2 = std::norm(e);
                    const bool aligned = std::find(f.aligned.begin(), f.aligned.end(),
                                                   StreamRef{k, static_cast<int>(i)}) != f.aligned.end();
                    if (aligned) {
                        d.mismatch_power += e2 * Pt;
                        d.max_mismatch_coeff2 = std::max(d.max_mismatch_coeff2, e2);
                        ++n_aligned;
                    } else {
                        d.leakage_power += e2 * Pt;
                    }
                }
            }
            spec.sigma2_bound = static_cast<double>(n_streams - n_aligned) * gamma2 * Pt;
            d.desired_power = spec.beta * spec.beta * Pt;
            d.empirical_sinr = d.desired_power / (d.mismatch_power + d.leakage_power + d.noise_power);
            d.theoretical_lower_bound = sinr_lower_bound(precoders.c, P, L, nu, K, which);
            out.push_back(std::move(sc));
        }
    }
    return out;
}

std::vector<std::vector<cplx>> transmit(const TupleChannel& channel,
                                        const TransmitVectorSet& precoders,
                                        const std::vector<std::vector<cplx>>& symbols,
                                        const std::vector<std::vector<cplx>>& noise) {
    const auto& kt = kernels::active();
    const int K = channel.K;
    const int L = channel.L;
    std::vector<std::vector<cplx>> x(K, std::vector<cplx>(L));
    for (int k = 0; k < K; ++k) {
        for (const auto& v : precoders.vectors[k]) {
            const cplx s = symbols.at(k).at(v.index);
            if (s == cplx(0.0)) continue;
            const auto e = v.entries(L);
            kt.caxpy(s, e.data(), x[k].data(), L);
        }
    }
    std::vector<std::vector<cplx>> y(K, std::vector<cplx>(L));
    for (int m = 0; m < K; ++m) {
        for (int k = 0; k < K; ++k) {
            for (int l = 0; l < L; ++l) y[m][l] += channel.D[m * K + k][l] * x[k][l];
        }
        if (!noise.empty() && !noise[m].empty()) {
            for (int l = 0; l < L; ++l) y[m][l] += noise[m][l];
        }
    }
    return y;
}

cplx apply_filter(const MatchedFilter& filter, const std::vector<cplx>& y) {
    const auto fe = filter.entries(static_cast<int>(y.size()));
    return kernels::active().cdot(fe.data(), y.data(), y.size());
}

}  // namespace calign
