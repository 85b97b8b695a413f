// fracwave: simulate single-mode fractionally damped waves and recover the damping.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fracwave/error.hpp"
#include "fracwave/harness.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kMethod = 3, kIo = 4 };

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("fracwave");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("FRACWAVE_LOG");
    const std::string level = env ? env : "error";
    if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else spdlog::set_level(spdlog::level::err);
}

int exit_code(const fracwave::Error& e) {
    switch (e.code()) {
        case fracwave::ErrorCode::ConfigError: return kConfig;
        case fracwave::ErrorCode::IoError: return kIo;
        default: return kMethod;
    }
}

struct Args {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool analytic = false;
    std::string trace;
};

fracwave::ExperimentConfig load(const Args& a) {
    auto c = fracwave::load_config(a.config);
    if (a.seed) fracwave::override_seed(c, *a.seed);
    return c;
}

std::optional<fracwave::TimeTrace> input_trace(const Args& a) {
    if (a.trace.empty()) return std::nullopt;
    return fracwave::read_trace_csv(a.trace);
}

int cmd_simulate(const Args& a) {
    const auto c = load(a);
    const auto trace = fracwave::run_simulate(c, a.out);
    fmt::print("{} samples written to {}\n", trace.size(), (std::filesystem::path(a.out) / c.outputs.trace).string());
    return kOk;
}

int cmd_transform(const Args& a) {
    const auto c = load(a);
    const auto trace = a.trace.empty() ? fracwave::simulate(c) : fracwave::read_trace_csv(a.trace);
    const auto samples = fracwave::run_transform(c, trace, a.out);
    std::cout << fracwave::format_laplace_csv(samples);
    return kOk;
}

int cmd_reconstruct(const Args& a) {
    const auto c = load(a);
    fracwave::ReconstructInput in;
    in.trace = input_trace(a);
    in.analytic_data = a.analytic;
    const auto report = fracwave::run_reconstruct(c, a.out, in);
    std::cout << fracwave::format_report(report);
    return report.status == fracwave::ReconStatus::Diverged ? kMethod : kOk;
}

int cmd_poles(const Args& a) {
    const auto c = load(a);
    const auto [up, down] = fracwave::find_poles(c.model, 100, c.excitation);
    for (const auto& p : {up, down}) {
        fmt::print("pole = {:.17g} {:+.17g}i  residue = {:.17g} {:+.17g}i  |omega| = {:.3e}\n", p.pole.real(),
                   p.pole.imag(), p.residue.real(), p.residue.imag(), p.omega_residual);
    }
    return kOk;
}

int cmd_verify(const Args& a) {
    const auto c = load(a);
    bool ok = true;
    for (const auto& r : fracwave::run_verify(c)) {
        fmt::print("{} {}: {}\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
        ok = ok && r.passed;
    }
    return ok ? kOk : kMethod;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"fracwave: forward solves and damping reconstruction for fractionally damped waves"};
    app.require_subcommand(1);

    Args args;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "experiment configuration (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory");
        sub->add_option("--seed", args.seed, "override noise.seed");
    };
    auto* simulate = app.add_subcommand("simulate", "forward solve on the sampling grid and write the trace CSV");
    auto* transform = app.add_subcommand("transform", "Laplace samples of a trace");
    auto* reconstruct = app.add_subcommand("reconstruct", "run the configured reconstruction method");
    auto* poles = app.add_subcommand("poles", "print the pole pair and residues");
    auto* verify = app.add_subcommand("verify", "run the invariant checks on the configured model");
    for (auto* sub : {simulate, transform, reconstruct, poles, verify}) add_common(sub);
    for (auto* sub : {transform, reconstruct}) sub->add_option("--trace", args.trace, "input trace CSV (t,h)");
    reconstruct->add_flag("--analytic-data", args.analytic, "use exact transfer-function or force data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*simulate) return cmd_simulate(args);
        if (*transform) return cmd_transform(args);
        if (*reconstruct) return cmd_reconstruct(args);
        if (*poles) return cmd_poles(args);
        if (*verify) return cmd_verify(args);
    } catch (const fracwave::Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << e.what() << '\n';
        return kIo;
    }
    return kOk;
}
