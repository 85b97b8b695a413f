#include "fracwave/laplace.hpp"

#include <cmath>
#include <numbers>

#include "fracwave/detail/parallel.hpp"
#include "fracwave/detail/piecewise_laplace.hpp"
#include "fracwave/error.hpp"

namespace fracwave {

void LaplaceSamples::validate() const {
    if (abscissae.size() != values.size()) throw Error(ErrorCode::InvalidGrid, "abscissae and values differ in length");
    for (std::size_t i = 0; i < abscissae.size(); ++i) {
        if (!(abscissae[i] > 0.0)) throw Error(ErrorCode::InvalidGrid, "Laplace abscissae must be positive");
        if (i > 0 && !(abscissae[i] > abscissae[i - 1])) {
            throw Error(ErrorCode::InvalidGrid, "Laplace abscissae must be strictly increasing");
        }
    }
}

double laplace_numeric(const TimeTrace& trace, double s, std::optional<double> big_lambda_hint) {
    trace.validate();
    if (trace.size() < 32) throw Error(ErrorCode::GridTooCoarse, "need at least 32 samples");
    if (trace.times.front() != 0.0) throw Error(ErrorCode::InvalidGrid, "trace must start at t = 0");
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "Laplace abscissa must be positive");
    if (big_lambda_hint) {
        const double quarter = 0.5 * std::numbers::pi / std::sqrt(*big_lambda_hint);
        for (std::size_t i = 1; i < trace.size(); ++i) {
            if (trace.times[i] - trace.times[i - 1] > quarter) {
                throw Error(ErrorCode::GridTooCoarse, "fewer than 4 samples per period 2 pi / sqrt(Lambda)");
            }
        }
    }
    // Neumaier compensated sum over the intervals
    double acc = 0.0, carry = 0.0;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        const double a = trace.times[i];
        const double decay = std::exp(-s * a);
        if (decay == 0.0) break;
        double wa, wb;
        detail::linear_segment_weights(s, a, trace.times[i + 1], wa, wb);
        const double piece = decay * (wa * trace.values[i] + wb * trace.values[i + 1]);
        const double next = acc + piece;
        carry += std::abs(acc) >= std::abs(piece) ? (acc - next) + piece : (piece - next) + acc;
        acc = next;
    }
    return acc + carry;
}

LaplaceSamples laplace_transform(const TimeTrace& trace, std::span<const double> abscissae, Execution execution,
                                 std::optional<double> big_lambda_hint) {
    LaplaceSamples out;
    out.abscissae.assign(abscissae.begin(), abscissae.end());
    out.values.assign(abscissae.size(), 0.0);
    out.truncation_horizon = trace.times.empty() ? 0.0 : trace.times.back();
    out.validate();
    detail::for_each_index(static_cast<std::ptrdiff_t>(abscissae.size()), execution == Execution::Parallel,
                           [&](std::ptrdiff_t m) {
                               const auto i = static_cast<std::size_t>(m);
                               out.values[i] = laplace_numeric(trace, abscissae[i], big_lambda_hint);
                           });
    return out;
}

LaplaceSamples laplace_analytic(const DampingModel& model, const Excitation& exc, std::span<const double> abscissae) {
    validate_excitation(exc, model);
    LaplaceSamples out;
    out.abscissae.assign(abscissae.begin(), abscissae.end());
    for (double s : abscissae) out.values.push_back(hhat_analytic(model, exc, cplx(s, 0.0)).real());
    out.validate();
    return out;
}

cplx residue_at(const DampingModel& model, const Excitation& exc, cplx pole) {
    const double scale = std::norm(pole) + model.big_lambda;
    if (std::abs(omega(model, pole)) > 1e-8 * scale) {
        throw Error(ErrorCode::InvalidArgument, "point is not a zero of omega");
    }
    const cplx dw = omega_derivative(model, pole);
    if (std::abs(dw) < 1e-14) throw Error(ErrorCode::ZeroDerivative, "omega'(p) vanishes; the pole is not simple");
    return resolvent_numerator(model, exc, pole) * exc.scale() / dw;
}

std::pair<PoleData, PoleData> find_poles(const DampingModel& model_in, int max_iter, const Excitation& exc) {
    const DampingModel model = validate_model(model_in);
    const double lam = model.big_lambda;
    cplx s(0.0, std::sqrt(lam));
    auto tol = [&](cplx x) { return 1e-12 * (std::norm(x) + lam); };

    cplx w = omega(model, s);
    bool converged = std::abs(w) < tol(s);
    for (int it = 0; it < max_iter && !converged; ++it) {
        const cplx step = w / omega_derivative(model, s);
        double t = 1.0;
        cplx next = s - step;
        cplx wn = 0.0;
        for (int h = 0; h < 40; ++h) {
            next = s - t * step;
            if (next.imag() > 0.0) {
                wn = omega(model, next);
                if (std::abs(wn) < std::abs(w)) break;
            }
            t *= 0.5;
        }
        if (!(next.imag() > 0.0)) break;
        const bool stalled = std::abs(next - s) <= 1e-15 * std::abs(s);
        s = next;
        w = wn;
        converged = std::abs(w) < tol(s) || stalled;
    }
    if (!(std::abs(w) < 1e-10 * (std::norm(s) + lam))) {
        throw Error(ErrorCode::NewtonDiverged, "pole iteration stopped at s = " + std::to_string(s.real()) + " + " +
                                                   std::to_string(s.imag()) + "i");
    }
    if (s.real() > 1e-12 * std::abs(s)) {
        throw Error(ErrorCode::RightHalfPlanePole, "pole with positive real part: the model is not dissipative");
    }
    PoleData upper{s, residue_at(model, exc, s), std::abs(w)};
    PoleData lower{std::conj(s), std::conj(upper.residue), std::abs(w)};
    return {upper, lower};
}

}  // namespace fracwave
