#pragma once

#include <cmath>
#include <complex>
#include <type_traits>

namespace fracwave::detail {

/// Weights (w_a, w_b) with
///   int_a^b e^{-s t} (f_a (b-t) + f_b (t-a)) / (b-a) dt = e^{-s a} (w_a f_a + w_b f_b).
/// Works for real or complex s; small |s (b-a)| uses a series to avoid cancellation.
template <typename T>
void linear_segment_weights(T s, double a, double b, T& w_a, T& w_b) {
    const double width = b - a;
    const T x = s * width;
    T i0;  // int_0^w e^{-s u} du
    T i1;  // int_0^w u e^{-s u} du / w
    if (std::abs(x) < 1e-2) {
        // i0 = w (1 - x/2 + x^2/6 - x^3/24 + ...), i1 = w (1/2 - x/3 + x^2/8 - x^3/30 + ...)
        T p = T(1.0);
        T s0 = T(0.0);
        T s1 = T(0.0);
        double fact = 1.0;
        for (int k = 0; k < 10; ++k) {
            if (k > 0) fact *= static_cast<double>(k);
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            s0 += sign * p / (fact * static_cast<double>(k + 1));
            s1 += sign * p / (fact * static_cast<double>(k + 2));
            p *= x;
        }
        i0 = width * s0;
        i1 = width * s1;
    } else {
        const T e = std::exp(-x);
        T one_minus_e;
        if constexpr (std::is_floating_point_v<T>) one_minus_e = -std::expm1(-x);
        else one_minus_e = T(1.0) - e;
        i0 = one_minus_e / s;
        i1 = (one_minus_e - e * x) / (s * x);
    }
    w_a = i0 - i1;
    w_b = i1;
}

}  // namespace fracwave::detail
