#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <unistd.h>

#include "fracwave/error.hpp"
#include "fracwave/harness.hpp"

namespace fracwave {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Lines of "a,b" after a header naming the two columns.
std::pair<std::vector<double>, std::vector<double>> parse_two_columns(const std::string& text, const std::string& origin,
                                                                      std::string_view header) {
    std::istringstream in(text);
    std::string line;
    std::vector<double> a, b;
    int lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!seen_header) {
            if (line != header) {
                throw Error(ErrorCode::IoError, fmt::format("{}:{}: expected header '{}'", origin, lineno, header));
            }
            seen_header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(ErrorCode::IoError, fmt::format("{}:{}: expected two columns", origin, lineno));
        try {
            std::size_t used = 0;
            const std::string left = line.substr(0, comma), right = line.substr(comma + 1);
            a.push_back(std::stod(left, &used));
            if (used != left.size()) throw std::invalid_argument("trailing characters");
            b.push_back(std::stod(right, &used));
            if (used != right.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, fmt::format("{}:{}: malformed number", origin, lineno));
        }
    }
    if (!seen_header) throw Error(ErrorCode::IoError, origin + ": empty file");
    return {std::move(a), std::move(b)};
}

std::string cell(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

TimeTrace add_noise(const TimeTrace& trace, double level, std::uint64_t seed) {
    if (!(level >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise level must be nonnegative");
    TimeTrace out = trace;
    out.meta.noise_level = level;
    out.meta.seed = seed;
    if (level == 0.0) return out;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> xi(0.0, 1.0);
    for (double& h : out.values) h *= 1.0 + level * xi(gen);
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
    const auto tmp = dir / fmt::format(".{}.{}.tmp", path.filename().string(), ::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
    }
}

std::string format_trace_csv(const TimeTrace& trace) {
    std::string out = "t,h\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out += cell(trace.times[i]) + "," + cell(trace.values[i]) + "\n";
    return out;
}

TimeTrace parse_trace_csv(const std::string& text, const std::string& origin) {
    auto [t, h] = parse_two_columns(text, origin, "t,h");
    TimeTrace trace;
    trace.times = std::move(t);
    trace.values = std::move(h);
    try {
        trace.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::IoError, origin + ": " + e.what());
    }
    return trace;
}

std::string format_laplace_csv(const LaplaceSamples& samples) {
    std::string out = "s,hhat\n";
    for (std::size_t i = 0; i < samples.size(); ++i) out += cell(samples.abscissae[i]) + "," + cell(samples.values[i]) + "\n";
    return out;
}

LaplaceSamples parse_laplace_csv(const std::string& text, const std::string& origin) {
    auto [s, v] = parse_two_columns(text, origin, "s,hhat");
    LaplaceSamples out;
    out.abscissae = std::move(s);
    out.values = std::move(v);
    try {
        out.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::IoError, origin + ": " + e.what());
    }
    return out;
}

void write_trace_csv(const std::filesystem::path& path, const TimeTrace& trace) {
    write_file_atomic(path, format_trace_csv(trace));
}
TimeTrace read_trace_csv(const std::filesystem::path& path) { return parse_trace_csv(read_file(path), path.string()); }
void write_laplace_csv(const std::filesystem::path& path, const LaplaceSamples& samples) {
    write_file_atomic(path, format_laplace_csv(samples));
}
LaplaceSamples read_laplace_csv(const std::filesystem::path& path) {
    return parse_laplace_csv(read_file(path), path.string());
}

std::string format_iteration_table(const ReconstructionReport& report) {
    std::size_t n = 0;
    bool has_lambda = false;
    for (const auto& r : report.history) {
        n = std::max(n, r.alpha.size());
        has_lambda = has_lambda || r.big_lambda.has_value();
    }
    std::string out = "iter |";
    for (std::size_t k = 1; k <= n; ++k) out += fmt::format(" {:>9}", fmt::format("alpha_{}", k));
    out += " |";
    for (std::size_t k = 1; k <= n; ++k) out += fmt::format(" {:>9}", fmt::format("b_{}", k));
    if (has_lambda) out += fmt::format(" | {:>9}", "Lambda");
    out += fmt::format(" | {:>10}\n", "residual");
    for (const auto& r : report.history) {
        out += fmt::format("{:>4} |", r.iteration);
        for (std::size_t k = 0; k < n; ++k) out += k < r.alpha.size() ? fmt::format(" {:>9.4f}", r.alpha[k]) : fmt::format(" {:>9}", "");
        out += " |";
        for (std::size_t k = 0; k < n; ++k) out += k < r.b.size() ? fmt::format(" {:>9.4f}", r.b[k]) : fmt::format(" {:>9}", "");
        if (has_lambda) out += r.big_lambda ? fmt::format(" | {:>9.4f}", *r.big_lambda) : fmt::format(" | {:>9}", "");
        out += r.residual ? fmt::format(" | {:>10.3e}\n", *r.residual) : fmt::format(" | {:>10}\n", "");
    }
    return out;
}

std::string format_report(const ReconstructionReport& report) {
    std::string out;
    out += fmt::format("method = {}\n", report.method);
    out += fmt::format("status = {}\n", to_string(report.status));
    out += fmt::format("config_digest = {}\n", report.config_digest);
    out += fmt::format("iterations = {}\n", report.history.empty() ? 0 : report.history.back().iteration);
    out += fmt::format("final_residual = {:.17g}\n", report.final_residual());
    out += fmt::format("recovered.big_lambda = {:.17g}\n", report.recovered.big_lambda);
    for (std::size_t k = 0; k < report.recovered.damping.size(); ++k) {
        const auto& t = report.recovered.damping[k];
        out += fmt::format("recovered.term{} = alpha {:.17g} beta {:.17g} b {:.17g}\n", k + 1, t.alpha, t.beta, t.b);
    }
    for (std::size_t k : report.masked_terms) out += fmt::format("masked_term = {}\n", k + 1);
    for (const auto& note : report.notes) out += fmt::format("note = {}\n", note);
    for (const auto& p : report.pruning_log) {
        out += fmt::format("prune = iteration {} term {} {}\n", p.iteration, p.term, p.reason);
    }
    out += "\n[iterations]\n";
    out += format_iteration_table(report);
    return out;
}

std::string plot_data(const TimeTrace& trace) {
    std::string out = "# t h\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out += cell(trace.times[i]) + " " + cell(trace.values[i]) + "\n";
    return out;
}

std::string plot_data(const ReconstructionReport& report, const ExperimentConfig& config) {
    const LaplaceGridSpec grid = config.method ? config.method->laplace : LaplaceGridSpec{};
    const auto s = grid.abscissae();
    std::vector<std::vector<double>> cols;
    auto column = [&](const DampingModel& m) {
        std::vector<double> v(s.size(), std::numeric_limits<double>::quiet_NaN());
        try {
            const DampingModel valid = validate_model(m);
            for (std::size_t i = 0; i < s.size(); ++i) v[i] = hhat_analytic(valid, config.excitation, cplx(s[i], 0.0)).real();
        } catch (const Error&) {
            // iterates outside the admissible set have no transfer function
        }
        return v;
    };
    cols.push_back(column(config.model));
    std::string header = "# s actual";
    for (const auto& r : report.history) {
        DampingModel m = config.model;
        m.damping.clear();
        m.higher.clear();
        m.big_lambda = r.big_lambda.value_or(config.model.big_lambda);
        for (std::size_t k = 0; k < r.alpha.size() && k < r.b.size(); ++k) m.damping.push_back({r.alpha[k], 1.0, r.b[k]});
        std::sort(m.damping.begin(), m.damping.end(), [](const auto& x, const auto& y) { return x.alpha < y.alpha; });
        cols.push_back(column(m));
        header += fmt::format(" iter{}", r.iteration);
    }
    std::string out = header + "\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += cell(s[i]);
        for (const auto& c : cols) out += " " + cell(c[i]);
        out += "\n";
    }
    return out;
}

void emit_plot(const TimeTrace& trace, const std::filesystem::path& path) { write_file_atomic(path, plot_data(trace)); }

void emit_plot(const ReconstructionReport& report, const ExperimentConfig& config, const std::filesystem::path& path) {
    write_file_atomic(path, plot_data(report, config));
}

}  // namespace fracwave
