#include "fracwave/special.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace fracwave::special {
namespace {

thread_local GammaProbe* active_probe = nullptr;

inline void probe(double x) {
    if (active_probe != nullptr) active_probe->record(x);
}

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

// Lanczos sum for Gamma(x), x >= 0.5.
double lanczos_gamma(double x) {
    x -= 1.0;
    double a = kLanczos[0];
    const double t = x + kLanczosG + 0.5;
    for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (x + static_cast<double>(i));
    // split the power to delay overflow for large x
    const double half = std::pow(t, 0.5 * (x + 0.5));
    return std::sqrt(2.0 * std::numbers::pi) * half * (half * std::exp(-t)) * a;
}

double lanczos_lgamma(double x) {
    x -= 1.0;
    double a = kLanczos[0];
    const double t = x + kLanczosG + 0.5;
    for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (x + static_cast<double>(i));
    return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

}  // namespace

GammaProbe::GammaProbe() : previous_(active_probe) { active_probe = this; }
GammaProbe::~GammaProbe() { active_probe = previous_; }

double gamma(double x) {
    probe(x);
    if (std::isnan(x)) return x;
    if (is_nonpositive_integer(x)) return std::numeric_limits<double>::infinity();
    if (x < 0.5) {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
    }
    if (x > 171.7) return std::numeric_limits<double>::infinity();
    return lanczos_gamma(x);
}

double rgamma(double x) {
    probe(x);
    if (std::isnan(x)) return x;
    if (is_nonpositive_integer(x)) return 0.0;
    if (x < 0.5) {
        return std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x) / std::numbers::pi;
    }
    if (x > 171.7) return 0.0;
    return 1.0 / lanczos_gamma(x);
}

double lgamma_abs(double x) {
    probe(x);
    if (is_nonpositive_integer(x)) return std::numeric_limits<double>::infinity();
    if (x < 0.5) {
        return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
               lanczos_lgamma(1.0 - x);
    }
    return lanczos_lgamma(x);
}

double digamma(double x) {
    probe(x);
    if (is_nonpositive_integer(x)) return std::numeric_limits<double>::quiet_NaN();
    double result = 0.0;
    if (x < 0.5) {
        // psi(1-x) - psi(x) = pi cot(pi x)
        result -= std::numbers::pi / std::tan(std::numbers::pi * x);
        x = 1.0 - x;
    }
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // asymptotic series with Bernoulli numbers
    const double tail =
        inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 / 132))));
    return result + std::log(x) - 0.5 * inv - tail;
}

}  // namespace fracwave::special
