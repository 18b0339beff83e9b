#include "calign/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

#include "calign/rng.hpp"
#include "calign/special_functions.hpp"
#include "calign/types.hpp"

namespace calign {
namespace {

void require_k(int K, const char* who) {
    if (K < 2) throw DomainError(fmt::format("{}: K = {} must be at least 2", who, K));
}

void require_p(double P, const char* who) {
    if (!(P >= 1.0) || !std::isfinite(P)) throw DomainError(fmt::format("{}: P = {} must be >= 1", who, P));
}

// Integral of f * erlang_pdf over [lo, inf).
template <class F>
double erlang_tail_integral(int K, double lo, F f) {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto g = [&](double r) {
        const double w = erlang_pdf(K, r);
        return w == 0.0 ? 0.0 : f(r) * w;
    };
    return integrator.integrate(g, lo, std::numeric_limits<double>::infinity());
}

double expected_waterfill_power(int K, double mu) {
    return erlang_tail_integral(K, mu, [mu](double r) { return 1.0 / mu - 1.0 / r; });
}

// Welford accumulation of the sample mean and standard error.
struct Moments {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double std_error() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

}  // namespace

double erlang_pdf(int K, double r) {
    if (r <= 0.0) return 0.0;
    return std::exp((K - 1) * std::log(r) - r - std::lgamma(static_cast<double>(K)));
}

double ergodic_rate(int K, const std::function<double(double)>& power_of_r) {
    require_k(K, "ergodic_rate");
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [&](double r) {
        const double w = erlang_pdf(K, r);
        return w == 0.0 ? 0.0 : std::log2(1.0 + r * power_of_r(r)) * w;
    };
    return K * integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

WaterfillSolution waterfill(int K, double P) {
    require_k(K, "waterfill");
    require_p(P, "waterfill");
    const double budget = K * P;
    auto excess = [&](double mu) { return expected_waterfill_power(K, mu) - budget; };

    // E[(1/mu - 1/r)^+] decreases in mu; expand until the sign changes.
    double lo = 1.0 / budget, hi = 1.0 / budget;
    while (excess(lo) < 0.0) {
        lo /= 2.0;
        if (lo < 1e-300) throw NumericError("waterfill: lower bracket not found");
    }
    while (excess(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("waterfill: upper bracket not found");
    }
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::bisect(excess, lo, hi,
                                                   boost::math::tools::eps_tolerance<double>(50), max_iter);
    if (max_iter >= 200) throw NumericError("waterfill: bisection did not converge");

    WaterfillSolution sol;
    sol.mu = 0.5 * (a + b);
    sol.iterations = static_cast<int>(max_iter);
    sol.expected_power = expected_waterfill_power(K, sol.mu);
    const double mu = sol.mu;
    sol.rate = K * erlang_tail_integral(K, mu, [mu](double r) { return std::log2(r / mu); });
    return sol;
}

double cutset_upper(int K, double P, CutsetMode mode) {
    require_k(K, "cutset_upper");
    require_p(P, "cutset_upper");
    if (mode == CutsetMode::closed_form) return K * std::log2(1.0 + 4.0 * K * K * P);
    return waterfill(K, P).rate;
}

double cutset_relaxed(int K, double P) {
    require_k(K, "cutset_relaxed");
    return K * std::log2(P) + 5.0 * K * std::log2(static_cast<double>(K));
}

double achievable_k2_raw(double P, int L, double nu, double elogc, double delta) {
    require_p(P, "achievable_k2");
    if (L < 2) throw DomainError(fmt::format("achievable_k2: L = {} must be at least 2", L));
    if (!(nu > 0.0)) throw DomainError("achievable_k2: nu must be positive");
    if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("achievable_k2: delta must lie in [0, 1)");
    const double pi1 = std::numbers::pi + 1.0;
    const double denom = std::isinf(nu) ? 1.0 : 1.0 + 2.0 * L * L * pi1 * pi1 * P / (nu * nu);
    return (2.0 * L - 1.0) / L * ((1.0 - delta) * std::log2(P / 16.0 / denom) - 6.0 * elogc);
}

double achievable_k2(double P, int L, double nu, double elogc, double delta) {
    return std::max(0.0, achievable_k2_raw(P, L, nu, elogc, delta));
}

double achievable_k2_limit(double P, double elogc) {
    require_p(P, "achievable_k2_limit");
    return 2.0 * (std::log2(P / 16.0) - 6.0 * elogc);
}

double achievable_general_raw(double P, int K, int I, double elogc) {
    require_k(K, "achievable_general");
    require_p(P, "achievable_general");
    if (I < 1) throw DomainError(fmt::format("achievable_general: I = {} must be at least 1", I));
    const double k2 = static_cast<double>(K) * K;
    const double prefactor = K * std::pow(static_cast<double>(I) / (I + 1.0), k2);
    return prefactor * (std::log2(P) - 4.0 * K - 2.0 * k2 - 4.0 * elogc);
}

double achievable_general(double P, int K, int I, double elogc) {
    return std::max(0.0, achievable_general_raw(P, K, I, elogc));
}

double achievable_general_limit_raw(double P, int K, double elogc) {
    require_k(K, "achievable_general_limit");
    require_p(P, "achievable_general_limit");
    const double k = K;
    return k * std::log2(P) - 4.0 * k * k - 2.0 * k * k * k - 4.0 * k * elogc;
}

ElogcEstimate expected_log_c(int K, ElogcMethod method, std::size_t samples, std::uint64_t seed) {
    require_k(K, "expected_log_c");
    ElogcEstimate est;
    est.analytic_bound = 0.75 * K * K;
    if (method == ElogcMethod::closed_form) {
        est.value = 0.5 * K * K * per_gain_log_constant();
        return est;
    }
    if (samples == 0) throw DomainError("expected_log_c: monte carlo needs samples > 0");
    CounterRng rng(stream_key(seed, StreamTag::monte_carlo, static_cast<std::uint64_t>(K)));
    Moments m;
    for (std::size_t s = 0; s < samples; ++s) {
        double total = 0.0;
        for (int g = 0; g < K * K; ++g) total += std::abs(std::log2(std::abs(rng.complex_normal())));
        m.add(total);
    }
    est.value = m.mean;
    est.std_error = m.std_error();
    est.samples = samples;
    return est;
}

ElogcEstimate per_gain_constant_mc(std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw DomainError("per_gain_constant_mc: samples must be positive");
    CounterRng rng(stream_key(seed, StreamTag::monte_carlo, 0, 1));
    Moments m;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = -std::log1p(-rng.uniform());
        m.add(std::abs(std::log2(x)));
    }
    ElogcEstimate est;
    est.value = m.mean;
    est.std_error = m.std_error();
    est.samples = samples;
    est.analytic_bound = 1.5;
    return est;
}

std::pair<double, double> gap_constants(int K, int D) {
    require_k(K, "gap_constants");
    if (D < 1) throw DomainError(fmt::format("gap_constants: D = {} must be at least 1", D));
    const double k = K;
    return {7.0 * k * k * k + 5.0 * k * std::log2(k), 4.0 * (D + 1.0) * k};
}

BoundReport make_bound_report(int K, double P, int D) {
    BoundReport r;
    r.K = K;
    r.P = P;
    r.D = D;
    const auto [gap, cf] = gap_constants(K, D);
    r.gap = gap;
    r.cf_gap = cf;
    r.lower_raw = K * std::log2(P) - 7.0 * K * K * K;
    r.lower = std::max(0.0, r.lower_raw);
    r.upper = cutset_relaxed(K, P);
    r.upper_exact = cutset_upper(K, P, CutsetMode::closed_form);
    r.achievable_raw =
        achievable_general_limit_raw(P, K, expected_log_c(K, ElogcMethod::closed_form).value);
    r.achievable = std::max(0.0, r.achievable_raw);
    return r;
}

const char* bound_csv_header() { return "K,P,D,lower,upper_exact,upper_relaxed,achievable,gap,cf_gap"; }

}  // namespace calign
