#pragma once

#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fracwave/forward.hpp"
#include "fracwave/model.hpp"

namespace fracwave {

struct LaplaceSamples {
    std::vector<double> abscissae;
    std::vector<double> values;
    double truncation_horizon = std::numeric_limits<double>::infinity();

    void validate() const;
    std::size_t size() const { return abscissae.size(); }
};

/// int_0^T e^{-st} h(t) dt for the piecewise-linear interpolant of the samples,
/// integrated exactly on every interval. The tail beyond T is not added.
/// With a Lambda hint, throws GridTooCoarse when a step exceeds a quarter period.
double laplace_numeric(const TimeTrace& trace, double s, std::optional<double> big_lambda_hint = {});

LaplaceSamples laplace_transform(const TimeTrace& trace, std::span<const double> abscissae,
                                 Execution execution = Execution::Parallel,
                                 std::optional<double> big_lambda_hint = {});

/// Exact transfer function on the given abscissae.
LaplaceSamples laplace_analytic(const DampingModel& model, const Excitation& exc, std::span<const double> abscissae);

struct PoleData {
    cplx pole;
    cplx residue;
    double omega_residual = 0.0;
};

/// Damped Newton on omega(s) = 0 started from i sqrt(Lambda); returns the pole in the
/// upper half-plane first, then its conjugate. Residues use the given excitation.
std::pair<PoleData, PoleData> find_poles(const DampingModel& model, int max_iter = 100, const Excitation& exc = {});

/// numerator(p) B phi <datum, phi> / omega'(p).
cplx residue_at(const DampingModel& model, const Excitation& exc, cplx pole);

}  // namespace fracwave
