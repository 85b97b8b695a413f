#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fracwave/error.hpp"
#include "fracwave/harness.hpp"

namespace fracwave {

namespace {

struct Outcome {
    ReconstructionReport report;
    std::optional<LaplaceSamples> samples;
};

const MethodSpec& method_of(const ExperimentConfig& config) {
    if (!config.method) throw Error(ErrorCode::ConfigError, "config has no method section");
    return *config.method;
}

Outcome reconstruct_impl(const ExperimentConfig& config, const ReconstructInput& input) {
    const MethodSpec& m = method_of(config);
    const ObservationSetup setup = config.observation();
    auto trace = [&]() -> TimeTrace { return input.trace ? *input.trace : simulate(config); };

    Outcome out;
    switch (m.kind) {
        case MethodSpec::Kind::Fulltime: {
            const auto s = m.laplace.abscissae();
            out.samples = input.analytic_data ? laplace_analytic(config.model, config.excitation, s)
                                              : laplace_transform(trace(), s);
            FulltimeOptions opts;
            if (m.max_iter) opts.gn.max_iter = *m.max_iter;
            if (m.tol) opts.gn.tol = *m.tol;
            opts.log_iterations = m.log_iterations;
            opts.fix_lambda = m.fix_lambda;
            const FulltimeParams init{m.b, m.alpha, m.big_lambda.value_or(config.model.big_lambda)};
            out.report = fulltime_newton(init, *out.samples, setup, opts);
            break;
        }
        case MethodSpec::Kind::Largetime: {
            LargetimeOptions opts;
            if (m.max_iter) opts.gn.max_iter = *m.max_iter;
            if (m.tol) opts.gn.tol = *m.tol;
            if (m.window_min) opts.t_min = *m.window_min;
            if (m.window_max) opts.t_max = *m.window_max;
            out.report = largetime_newton({m.alpha, m.b}, trace(), setup, opts);
            break;
        }
        case MethodSpec::Kind::Peel: {
            PeelOptions opts;
            if (m.max_terms) opts.max_terms = *m.max_terms;
            if (m.delta) opts.delta = *m.delta;
            if (m.window_min) opts.t_min = *m.window_min;
            if (m.window_max) opts.t_max = *m.window_max;
            opts.noise_floor = m.noise_floor;
            out.report = sequential_peel(trace(), setup, opts);
            break;
        }
        case MethodSpec::Kind::Smalltime: {
            TimeTrace g;
            if (input.analytic_data) {
                std::vector<double> t;
                for (double x : config.sampling.times())
                    if (x > 0.0) t.push_back(x);
                g = solve_damping_force(config.model, config.excitation, t);
            } else {
                g = smalltime_preprocess(trace(), config.model.big_lambda);
            }
            SmalltimeOptions opts;
            if (m.max_iter) opts.gn.max_iter = *m.max_iter;
            if (m.tol) opts.gn.tol = *m.tol;
            out.report = smalltime_newton({m.alpha, m.b}, g, setup, opts);
            break;
        }
    }
    out.report.config_digest = config.digest;
    return out;
}

CheckResult check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

CheckResult check_root_linkage(const ExperimentConfig& c) {
    try {
        const CompanionSystem sys = build_companion(c.model, c.excitation);
        const ModalSolution sol(sys, MlAccuracy{});
        double worst = 0.0;
        int physical = 0;
        for (const cplx& z : sol.roots()) {
            if (std::abs(std::arg(z)) * sys.M >= std::numbers::pi) continue;
            const cplx s = std::pow(z, sys.M);
            worst = std::max(worst, std::abs(omega(c.model, s)) / (std::norm(s) + c.model.big_lambda));
            ++physical;
        }
        return check("root-linkage", worst < 1e-8,
                     fmt::format("{} principal-sheet roots, max |omega(z^M)| / (|s|^2 + Lambda) = {:.3e}", physical, worst));
    } catch (const Error& e) {
        return check("root-linkage", false, e.what());
    }
}

CheckResult check_poles(const ExperimentConfig& c) {
    try {
        const auto [up, down] = find_poles(c.model, 100, c.excitation);
        const bool conj = std::abs(up.pole - std::conj(down.pole)) <= 1e-12 * std::abs(up.pole);
        const bool left = up.pole.real() <= 1e-12 * std::abs(up.pole);
        // (1 / 2 pi i) closed integral of hhat on a small circle, trapezoid rule
        constexpr int nodes = 256;
        constexpr double radius = 0.01;
        cplx integral = 0.0;
        for (int k = 0; k < nodes; ++k) {
            const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / nodes);
            integral += hhat_analytic(c.model, c.excitation, up.pole + radius * e) * radius * e;
        }
        integral /= static_cast<double>(nodes);
        const double rel = std::abs(integral - up.residue) / std::abs(up.residue);
        return check("poles", conj && left && rel < 1e-6,
                     fmt::format("pole {:.12g}{:+.12g}i, conjugate {}, left half-plane {}, residue mismatch {:.3e}",
                                 up.pole.real(), up.pole.imag(), conj ? "yes" : "no", left ? "yes" : "no", rel));
    } catch (const Error& e) {
        return check("poles", false, e.what());
    }
}

CheckResult check_transform(const ExperimentConfig& c) {
    try {
        const TimeTrace tr = solve_trace(c.model, c.excitation, uniform_grid(0.0, 40.0, 8001));
        const std::vector<double> s{1.0, 2.0, 4.0};
        const LaplaceSamples num = laplace_transform(tr, s);
        const LaplaceSamples ana = laplace_analytic(c.model, c.excitation, s);
        double scale = 0.0, worst = 0.0;
        for (double v : ana.values) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(num.values[i] - ana.values[i]) / scale);
        return check("transform", worst < 1e-3,
                     fmt::format("trace on [0,40] vs transfer function at s = 1, 2, 4: rel. error {:.3e}", worst));
    } catch (const Error& e) {
        return check("transform", false, e.what());
    }
}

CheckResult check_bounded(const ExperimentConfig& c) {
    if (c.excitation.kind == ExcitationKind::Source) return check("boundedness", true, "skipped: source excitation");
    try {
        const double period = 2.0 * std::numbers::pi / std::sqrt(c.model.big_lambda);
        const auto count = static_cast<std::size_t>(std::min(200001.0, std::ceil(1000.0 / (period / 16.0)) + 1.0));
        const TimeTrace tr = solve_trace(c.model, c.excitation, uniform_grid(0.0, 1000.0, count));
        double early = 0.0, all = 0.0;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const double a = std::abs(tr.values[i]);
            all = std::max(all, a);
            if (tr.times[i] <= 100.0) early = std::max(early, a);
        }
        return check("boundedness", all <= 1.000001 * early,
                     fmt::format("max |h| on [0,1000] = {:.12g}, on [0,100] = {:.12g}", all, early));
    } catch (const Error& e) {
        return check("boundedness", false, e.what());
    }
}

}  // namespace

TimeTrace simulate(const ExperimentConfig& config, Execution execution) {
    SolveOptions opts;
    opts.execution = execution;
    const auto times = config.sampling.times();
    spdlog::debug("solving {} samples on [{}, {}]", times.size(), times.front(), times.back());
    TimeTrace trace = solve_trace(config.model, config.excitation, times, opts);
    trace = add_noise(trace, config.noise.level, config.noise.seed);
    return trace;
}

TimeTrace run_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
    TimeTrace trace = simulate(config);
    const auto path = out_dir / config.outputs.trace;
    write_trace_csv(path, trace);
    emit_plot(trace, out_dir / config.outputs.plot);
    spdlog::info("wrote {} ({} samples)", path.string(), trace.size());
    return trace;
}

ReconstructionReport reconstruct(const ExperimentConfig& config, const ReconstructInput& input) {
    return reconstruct_impl(config, input).report;
}

ReconstructionReport run_reconstruct(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                     const ReconstructInput& input) {
    Outcome out = reconstruct_impl(config, input);
    if (out.samples) write_laplace_csv(out_dir / config.outputs.laplace, *out.samples);
    write_file_atomic(out_dir / config.outputs.report, format_report(out.report));
    emit_plot(out.report, config, out_dir / config.outputs.plot);
    spdlog::info("{} finished with status {}", out.report.method, to_string(out.report.status));
    return out.report;
}

LaplaceSamples run_transform(const ExperimentConfig& config, const TimeTrace& trace, const std::filesystem::path& out_dir) {
    const LaplaceGridSpec grid = config.method ? config.method->laplace : LaplaceGridSpec{};
    LaplaceSamples samples = laplace_transform(trace, grid.abscissae());
    write_laplace_csv(out_dir / config.outputs.laplace, samples);
    return samples;
}

std::vector<CheckResult> run_verify(const ExperimentConfig& config) {
    std::vector<CheckResult> out;
    out.push_back(check_root_linkage(config));
    out.push_back(check_poles(config));
    out.push_back(check_transform(config));
    out.push_back(check_bounded(config));
    return out;
}

}  // namespace fracwave
