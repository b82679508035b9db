#include "hiermap/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "hiermap/errors.hpp"

namespace hiermap::special {
namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// Lanczos series A_g(z) for the shifted argument z = x - 1.
double lanczos_sum(double z) {
    double acc = kLanczosCoef[0];
    for (std::size_t i = 1; i < kLanczosCoef.size(); ++i) {
        acc += kLanczosCoef[i] / (z + static_cast<double>(i));
    }
    return acc;
}

}  // namespace

double gamma(double x) {
    using std::numbers::pi;
    if (x < 0.5) {
        if (x == std::floor(x)) {
            throw DomainError("gamma: pole at nonpositive integer");
        }
        return pi / (std::sin(pi * x) * gamma(1.0 - x));
    }
    const double z = x - 1.0;
    const double t = z + kLanczosG + 0.5;
    return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * lanczos_sum(z);
}

double log_gamma(double x) {
    using std::numbers::pi;
    if (!(x > 0.0)) {
        throw DomainError("log_gamma: argument must be positive");
    }
    if (x < 0.5) {
        return std::log(pi / std::abs(std::sin(pi * x))) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    const double t = z + kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t + std::log(lanczos_sum(z));
}

double digamma(double x) {
    if (!(x > 0.0)) {
        throw DomainError("digamma: argument must be positive");
    }
    double result = 0.0;
    while (x < 12.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // psi(x) ~ log x - 1/(2x) - sum B_{2k} / (2k x^{2k})
    const double series =
        inv2 * (1.0 / 12.0 -
                 inv2 * (1.0 / 120.0 -
                         inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    return result + std::log(x) - 0.5 * inv - series;
}

}  // namespace hiermap::special
