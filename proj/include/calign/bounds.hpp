#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace calign {

enum class CutsetMode { closed_form, waterfill_numeric };

/// K log2(1 + 4K^2 P), or the water-filled ergodic value K E[log2(1 + r P*(r))]
/// with r ~ Erlang(K, 1) and P*(r) = (1/mu - 1/r)^+ meeting E[P*] = K P.
double cutset_upper(int K, double P, CutsetMode mode);

/// K log2 P + 5 K log2 K.
double cutset_relaxed(int K, double P);

struct WaterfillSolution {
    double mu = 0.0;
    double expected_power = 0.0;  ///< E[(1/mu - 1/r)^+] at the solved level
    double rate = 0.0;            ///< K E[log2(1 + r P*(r))]
    int iterations = 0;
};

WaterfillSolution waterfill(int K, double P);

/// E[log2(1 + r P(r))] * K for an arbitrary allocation, by quadrature against Erlang(K,1).
double ergodic_rate(int K, const std::function<double(double)>& power_of_r);
double erlang_pdf(int K, double r);

/// Raw (unclamped) K = 2 rate. nu may be +infinity.
double achievable_k2_raw(double P, int L, double nu, double elogc, double delta);
double achievable_k2(double P, int L, double nu, double elogc, double delta);
/// nu -> inf, L -> inf: 2 log2(P/16) - 12 elogc.
double achievable_k2_limit(double P, double elogc);

double achievable_general_raw(double P, int K, int I, double elogc);
double achievable_general(double P, int K, int I, double elogc);
/// I -> inf: K log2 P - 4K^2 - 2K^3 - 4K elogc.
double achievable_general_limit_raw(double P, int K, double elogc);

enum class ElogcMethod { closed_form, monte_carlo };

struct ElogcEstimate {
    double value = 0.0;
    double analytic_bound = 0.0;  ///< 3 K^2 / 4
    double std_error = 0.0;    ///< 0 for closed form
    std::size_t samples = 0;
};

/// E[log2 c(H)] = E sum over the K^2 gains of log2 max{|h|, 1/|h|}.
ElogcEstimate expected_log_c(int K, ElogcMethod method, std::size_t samples = 0,
                             std::uint64_t seed = 0);

/// Monte Carlo of E[log2 max{X, 1/X}] for X ~ Exp(1): the per-gain constant.
ElogcEstimate per_gain_constant_mc(std::size_t samples, std::uint64_t seed);

/// (7K^3 + 5K log2 K, 4(D+1)K).
std::pair<double, double> gap_constants(int K, int D);

struct BoundReport {
    int K = 2;
    double P = 1.0;
    int D = 1;
    double lower = 0.0;          ///< K log2 P - 7K^3, clamped
    double lower_raw = 0.0;
    double upper = 0.0;          ///< relaxed cut-set
    double upper_exact = 0.0;    ///< closed-form cut-set
    double achievable = 0.0;     ///< general construction, I -> inf, closed-form E[log c], clamped
    double achievable_raw = 0.0;
    double gap = 0.0;
    double cf_gap = 0.0;
};

BoundReport make_bound_report(int K, double P, int D);

/// Header and row in the order K,P,D,lower,upper_exact,upper_relaxed,achievable,gap,cf_gap.
const char* bound_csv_header();

}  // namespace calign
