#pragma once

namespace calign {

/// Exponential integral Ei(x) for x != 0 and x <= 40. Uses the power series
/// gamma + ln|x| + sum_k x^k / (k k!), summed until terms drop below 1e-17 of the
/// running total, and -E1(-x) by continued fraction for x <= -2.
double exponential_integral_ei(double x);

/// (gamma - 2 Ei(-1)) log2(e) = E[log2 max{X, 1/X}] for X ~ Exp(1).
double per_gain_log_constant();

}  // namespace calign
