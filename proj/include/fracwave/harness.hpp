#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fracwave/forward.hpp"
#include "fracwave/laplace.hpp"
#include "fracwave/model.hpp"
#include "fracwave/reconstruction.hpp"

namespace fracwave {

struct SamplingSpec {
    enum class Grid { Uniform, Geometric };
    Grid grid = Grid::Uniform;
    double t_min = 0.0;
    double t_max = 40.0;
    std::size_t count = 4001;

    std::vector<double> times() const;
};

struct NoiseSpec {
    double level = 0.0;  // relative standard deviation
    std::uint64_t seed = 0;
};

struct LaplaceGridSpec {
    double s_min = 0.5;
    double s_max = 16.0;
    std::size_t count = 24;

    std::vector<double> abscissae() const { return geometric_grid(s_min, s_max, count); }
};

struct MethodSpec {
    enum class Kind { Fulltime, Largetime, Smalltime, Peel };
    Kind kind = Kind::Fulltime;
    std::vector<double> alpha;  // initial guess
    std::vector<double> b;
    std::optional<double> big_lambda;  // fulltime initial guess
    std::optional<int> max_iter;
    std::optional<double> tol;
    std::optional<int> log_iterations;
    bool fix_lambda = false;
    LaplaceGridSpec laplace;
    std::optional<double> window_min;
    std::optional<double> window_max;
    std::optional<int> max_terms;
    std::optional<double> delta;
    std::optional<double> noise_floor;
};

std::string to_string(MethodSpec::Kind kind);

struct OutputSpec {
    std::string trace = "trace.csv";
    std::string laplace = "laplace.csv";
    std::string report = "report.txt";
    std::string plot = "plot.dat";
};

struct ExperimentConfig {
    DampingModel model;
    Excitation excitation;
    SamplingSpec sampling;
    NoiseSpec noise;
    std::optional<MethodSpec> method;
    OutputSpec outputs;
    std::string digest;  // of the canonical form, independent of comments and layout

    /// Observation data as the reconstruction methods see it.
    ObservationSetup observation() const;
};

/// YAML text to config. Unknown keys, wrong types and invalid models raise
/// ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Overrides the noise seed and refreshes the digest.
void override_seed(ExperimentConfig& config, std::uint64_t seed);

/// h_i (1 + level xi_i), xi_i standard normal from a generator seeded with seed.
TimeTrace add_noise(const TimeTrace& trace, double level, std::uint64_t seed);

// ---------------------------------------------------------------- files

/// Writes to a temporary sibling and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string format_trace_csv(const TimeTrace& trace);
TimeTrace parse_trace_csv(const std::string& text, const std::string& origin = "<csv>");
std::string format_laplace_csv(const LaplaceSamples& samples);
LaplaceSamples parse_laplace_csv(const std::string& text, const std::string& origin = "<csv>");

void write_trace_csv(const std::filesystem::path& path, const TimeTrace& trace);
TimeTrace read_trace_csv(const std::filesystem::path& path);
void write_laplace_csv(const std::filesystem::path& path, const LaplaceSamples& samples);
LaplaceSamples read_laplace_csv(const std::filesystem::path& path);

/// Key-value header followed by the iteration table (iter | alphas | bs | Lambda | residual).
std::string format_report(const ReconstructionReport& report);
std::string format_iteration_table(const ReconstructionReport& report);

/// Two columns t, h.
std::string plot_data(const TimeTrace& trace);
/// s, the configured model's hhat, then hhat of the model at every recorded iteration.
std::string plot_data(const ReconstructionReport& report, const ExperimentConfig& config);
void emit_plot(const TimeTrace& trace, const std::filesystem::path& path);
void emit_plot(const ReconstructionReport& report, const ExperimentConfig& config, const std::filesystem::path& path);

// ---------------------------------------------------------------- runs

/// Forward solve on the sampling grid plus noise.
TimeTrace simulate(const ExperimentConfig& config, Execution execution = Execution::Parallel);
/// simulate() and write the trace CSV into out_dir.
TimeTrace run_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct ReconstructInput {
    std::optional<TimeTrace> trace;  // simulated from the config when absent
    bool analytic_data = false;      // fulltime: exact transfer function instead of quadrature
};

/// Runs the configured method, writes report, plot data and (fulltime) the Laplace samples.
ReconstructionReport reconstruct(const ExperimentConfig& config, const ReconstructInput& input = {});
ReconstructionReport run_reconstruct(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                     const ReconstructInput& input = {});

LaplaceSamples run_transform(const ExperimentConfig& config, const TimeTrace& trace, const std::filesystem::path& out_dir);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant checks on the configured model: root linkage, pole placement and
/// residue, transform consistency, boundedness of the trace.
std::vector<CheckResult> run_verify(const ExperimentConfig& config);

}  // namespace fracwave
