#pragma once

#include <limits>

namespace fracwave::special {

/// Gamma function for real arguments: Lanczos approximation (g = 7, nine
/// coefficients) with the reflection formula below 1/2. Returns +/-inf at
/// the poles 0, -1, -2, ...
double gamma(double x);

/// 1/Gamma(x), exactly zero at the poles and for arguments where Gamma overflows.
double rgamma(double x);

/// log|Gamma(x)|.
double lgamma_abs(double x);

/// Digamma psi(x) = Gamma'(x)/Gamma(x).
double digamma(double x);

/// Records the smallest argument passed to gamma/rgamma/digamma on the current
/// thread while alive. Used to assert that term pruning keeps every Gamma
/// argument positive.
class GammaProbe {
public:
    GammaProbe();
    ~GammaProbe();
    GammaProbe(const GammaProbe&) = delete;
    GammaProbe& operator=(const GammaProbe&) = delete;

    double min_argument() const noexcept { return min_; }
    long calls() const noexcept { return calls_; }

    // internal
    void record(double x) noexcept {
        ++calls_;
        if (x < min_) min_ = x;
    }

private:
    GammaProbe* previous_;
    double min_ = std::numeric_limits<double>::infinity();
    long calls_ = 0;
};

}  // namespace fracwave::special
