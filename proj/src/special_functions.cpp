#include "calign/special_functions.hpp"

#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "calign/types.hpp"

namespace calign {
namespace {

// E1(t) for t > 1 by the modified Lentz continued fraction
// e^{-t} / (t + 1 - 1^2/(t + 3 - 2^2/(t + 5 - ...))).
double e1_continued_fraction(double t) {
    constexpr double tiny = 1e-300;
    double b = t + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double delta = c * d;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) return h * std::exp(-t);
    }
    throw NumericError(fmt::format("exponential_integral_ei: continued fraction did not converge at {}", -t));
}

}  // namespace

double exponential_integral_ei(double x) {
    if (x == 0.0 || !std::isfinite(x) || x > 40.0) {
        throw DomainError(fmt::format("exponential_integral_ei: x = {} outside the supported range", x));
    }
    // The alternating series cancels badly for large negative x.
    if (x <= -2.0) return -e1_continued_fraction(-x);
    double term = 1.0;  // x^k / k!
    double sum = 0.0;
    for (int k = 1; k < 500; ++k) {
        term *= x / k;
        const double add = term / k;
        sum += add;
        if (std::abs(add) < 1e-17 * std::max(1.0, std::abs(sum))) break;
    }
    return std::numbers::egamma + std::log(std::abs(x)) + sum;
}

double per_gain_log_constant() {
    return (std::numbers::egamma - 2.0 * exponential_integral_ei(-1.0)) * std::numbers::log2e;
}

}  // namespace calign
