#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fracwave/error.hpp"
#include "fracwave/harness.hpp"

using namespace fracwave;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = FRACWAVE_CONFIG_DIR;

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("fracwave_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string replaced(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; in >> f;) out.push_back(f);
    return out;
}

ErrorCode code_of(const std::function<void()>& f, std::string* message = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

const char* kSmallConfig = R"(# one damping term, full-time recovery
model:
  big_lambda: 4.0
  damping:
    - {alpha: 0.5, b: 0.1}
excitation:
  kind: u0
sampling:
  grid: uniform
  t_min: 0.0
  t_max: 40.0
  count: 4001
noise:
  level: 0.0
  seed: 3
method:
  name: fulltime
  initial:
    alpha: [0.6]
    b: [0.12]
    big_lambda: 4.5
outputs:
  trace: small_trace.csv
  laplace: small_laplace.csv
  report: small_report.txt
  plot: small_plot.dat
)";

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run cli(const std::string& args, const TempDir& dir) {
    const fs::path out = dir / "cli.stdout", err = dir / "cli.stderr";
    const std::string cmd = std::string("\"") + FRACWAVE_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

}  // namespace

// ---------------------------------------------------------------- config

TEST_CASE("shipped configs parse") {
    for (const char* name : {"table1.yaml", "table2.yaml", "table3.yaml", "peel.yaml", "masking.yaml"}) {
        CAPTURE(name);
        const ExperimentConfig c = load_config(kConfigs / name);
        CHECK(c.method.has_value());
        CHECK(c.digest.size() == 16);
    }
    const ExperimentConfig t1 = load_config(kConfigs / "table1.yaml");
    REQUIRE(t1.model.damping.size() == 3);
    CHECK(t1.model.big_lambda == 4.0);
    CHECK(t1.model.damping[1].alpha == 0.5);
    CHECK(t1.model.damping[2].b == 0.1);
    CHECK(t1.excitation.kind == ExcitationKind::InitialVelocity);
    CHECK(t1.method->kind == MethodSpec::Kind::Fulltime);
    CHECK(t1.method->alpha == std::vector<double>{0.3, 0.6, 0.8});
    CHECK(t1.method->big_lambda == 3.5);
    CHECK(t1.method->laplace.count == 24);
}

TEST_CASE("unknown keys are rejected with the offending line") {
    std::string text = kSmallConfig;
    text = replaced(text, "  t_max: 40.0", "  t_maks: 40.0");
    std::string msg;
    CHECK(code_of([&] { parse_config(text, "exp.yaml"); }, &msg) == ErrorCode::ConfigError);
    CHECK(msg.find("exp.yaml:11:") != std::string::npos);
    CHECK(msg.find("t_maks") != std::string::npos);

    std::string nested = kSmallConfig;
    nested = replaced(nested, "    b: [0.12]", "    bb: [0.12]");
    CHECK(code_of([&] { parse_config(nested, "exp.yaml"); }, &msg) == ErrorCode::ConfigError);
    CHECK(msg.find("exp.yaml:") != std::string::npos);
}

TEST_CASE("type errors, invalid models and syntax errors are config errors") {
    std::string msg;
    std::string typed = kSmallConfig;
    typed = replaced(typed, "big_lambda: 4.0", "big_lambda: four");
    CHECK(code_of([&] { parse_config(typed, "c.yaml"); }, &msg) == ErrorCode::ConfigError);
    CHECK(msg.find("c.yaml:3:") != std::string::npos);

    std::string order = kSmallConfig;
    order = replaced(order, "alpha: 0.5", "alpha: 1.5");
    CHECK(code_of([&] { parse_config(order); }) == ErrorCode::ConfigError);

    std::string kind = kSmallConfig;
    kind = replaced(kind, "kind: u0", "kind: u7");
    CHECK(code_of([&] { parse_config(kind, "c.yaml"); }, &msg) == ErrorCode::ConfigError);
    CHECK(msg.find("c.yaml:7:") != std::string::npos);

    CHECK(code_of([&] { parse_config("model: [1, 2\n", "c.yaml"); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { parse_config("noise: {level: 0.1}\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { load_config("/nonexistent/fracwave.yaml"); }) == ErrorCode::IoError);
}

TEST_CASE("config digest ignores layout and tracks content") {
    const ExperimentConfig a = parse_config(kSmallConfig);
    std::string relaid = "# different comment\n" + std::string(kSmallConfig);
    relaid = replaced(relaid, "    - {alpha: 0.5, b: 0.1}", "    - b: 0.1\n      alpha: 0.5");
    CHECK(parse_config(relaid).digest == a.digest);

    std::string changed = kSmallConfig;
    changed = replaced(changed, "b: 0.1}", "b: 0.2}");
    CHECK(parse_config(changed).digest != a.digest);

    ExperimentConfig seeded = a;
    override_seed(seeded, 99);
    CHECK(seeded.noise.seed == 99);
    CHECK(seeded.digest != a.digest);
}

// ---------------------------------------------------------------- noise

TEST_CASE("add_noise: identity at level 0 and seeded determinism") {
    TimeTrace clean;
    clean.times = uniform_grid(0.0, 1.0, 4000);
    for (double t : clean.times) clean.values.push_back(1.0 + t);
    CHECK(add_noise(clean, 0.0, 5).values == clean.values);
    const TimeTrace a = add_noise(clean, 1e-3, 7);
    const TimeTrace b = add_noise(clean, 1e-3, 7);
    const TimeTrace c = add_noise(clean, 1e-3, 8);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.meta.noise_level == 1e-3);
    CHECK(a.meta.seed == 7);
    CHECK(code_of([&] { add_noise(clean, -1.0, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("add_noise: relative perturbation variance matches level^2") {
    TimeTrace clean;
    clean.times = uniform_grid(0.0, 40.0, 4000);
    for (double t : clean.times) clean.values.push_back(std::cos(t) + 2.0);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const double level = 1e-2;
        const TimeTrace noisy = add_noise(clean, level, seed);
        double mean = 0.0;
        std::vector<double> xi;
        for (std::size_t i = 0; i < clean.size(); ++i) xi.push_back((noisy.values[i] - clean.values[i]) / clean.values[i]);
        for (double x : xi) mean += x;
        mean /= static_cast<double>(xi.size());
        double var = 0.0;
        for (double x : xi) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xi.size() - 1);
        // sample variance of 4000 normals has relative spread sqrt(2/3999) ~ 2.2%
        CHECK(std::abs(var / (level * level) - 1.0) < 0.10);
    }
}

// ---------------------------------------------------------------- files

TEST_CASE("trace and Laplace CSV round trip bit-exactly") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TimeTrace tr;
    double t = 0.0;
    for (int i = 0; i < 500; ++i) {
        tr.times.push_back(t);
        t += 1e-3 + std::abs(u(gen));
        tr.values.push_back(u(gen) * std::pow(10.0, 30.0 * u(gen)));
    }
    const std::string text = format_trace_csv(tr);
    CHECK(text.rfind("t,h\n", 0) == 0);
    const TimeTrace back = parse_trace_csv(text);
    CHECK(back.times == tr.times);
    CHECK(back.values == tr.values);

    LaplaceSamples ls;
    ls.abscissae = geometric_grid(0.5, 16.0, 24);
    for (double s : ls.abscissae) ls.values.push_back(1.0 / (s * s + 4.0 + std::sqrt(s)));
    const LaplaceSamples lb = parse_laplace_csv(format_laplace_csv(ls));
    CHECK(lb.abscissae == ls.abscissae);
    CHECK(lb.values == ls.values);

    std::string crlf = "t,h\r\n0,1\r\n1,2\r\n";
    CHECK(parse_trace_csv(crlf).values == std::vector<double>{1.0, 2.0});
}

TEST_CASE("malformed CSV is an io error with the line") {
    std::string msg;
    CHECK(code_of([&] { parse_trace_csv("t,h\n0,1\n1,x\n", "tr.csv"); }, &msg) == ErrorCode::IoError);
    CHECK(msg.find("tr.csv:3:") != std::string::npos);
    CHECK(code_of([&] { parse_trace_csv("time,h\n0,1\n", "tr.csv"); }, &msg) == ErrorCode::IoError);
    CHECK(msg.find("tr.csv:1:") != std::string::npos);
    CHECK(code_of([&] { parse_trace_csv("t,h\n0,1\n0,2\n"); }) == ErrorCode::IoError);
    CHECK(code_of([&] { parse_trace_csv(""); }) == ErrorCode::IoError);
    CHECK(code_of([&] { read_trace_csv("/nonexistent/trace.csv"); }) == ErrorCode::IoError);
}

TEST_CASE("atomic writes replace the target and leave no temporaries") {
    TempDir dir;
    const fs::path target = dir / "sub/out.txt";
    write_file_atomic(target, "first\n");
    CHECK(slurp(target) == "first\n");
    write_file_atomic(target, "second\n");
    CHECK(slurp(target) == "second\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(target.parent_path())) ++entries;
    CHECK(entries == 1);

    put(dir / "blocker", "x");
    CHECK(code_of([&] { write_file_atomic(dir / "blocker/out.txt", "y"); }) == ErrorCode::IoError);
}

// ---------------------------------------------------------------- runs

TEST_CASE("simulate: u0 trace starts at 1 and the CSV holds every sample") {
    ExperimentConfig c = load_config(kConfigs / "table1.yaml");
    c.excitation.kind = ExcitationKind::InitialDisplacement;
    c.sampling.count = 4000;
    c.outputs.trace = "u0.csv";
    c.outputs.plot = "u0.dat";
    TempDir dir;
    const TimeTrace tr = run_simulate(c, dir.path());
    CHECK(tr.values.front() == doctest::Approx(1.0).epsilon(1e-12));
    const TimeTrace back = read_trace_csv(dir / "u0.csv");
    CHECK(back.size() == 4000);
    CHECK(back.values == tr.values);
    CHECK(back.times.back() == 40.0);

    const auto plot = lines_of(slurp(dir / "u0.dat"));
    CHECK(plot.size() == 4001);
    CHECK(fields(plot[1]).size() == 2);
}

TEST_CASE("simulate: large-time trace approaches the three-term power law") {
    ExperimentConfig c = load_config(kConfigs / "table2.yaml");
    c.sampling.grid = SamplingSpec::Grid::Geometric;
    c.sampling.t_min = 1.0;
    c.sampling.t_max = 2e5;
    c.sampling.count = 2000;
    const TimeTrace tr = simulate(c);
    const double t = tr.times.back();
    // u0 data: hhat ~ sum_j b_j lambda s^{alpha_j - 1} / Lambda, hence h ~ sum_j b_j t^{-alpha_j} / (Lambda Gamma(1 - alpha_j))
    double tail = 0.0;
    for (const auto& term : c.model.damping) tail += term.b * std::pow(t, -term.alpha) / (c.model.big_lambda * std::tgamma(1.0 - term.alpha));
    CHECK(std::abs(tr.values.back() - tail) <= 0.02 * tail);
}

TEST_CASE("noisy simulation is reproducible") {
    ExperimentConfig c = parse_config(kSmallConfig);
    c.noise.level = 1e-3;
    c.noise.seed = 7;
    CHECK(simulate(c).values == simulate(c).values);
    ExperimentConfig other = c;
    override_seed(other, 8);
    CHECK(simulate(c).values != simulate(other).values);
}

TEST_CASE("serial and parallel simulation agree") {
    const ExperimentConfig c = parse_config(kSmallConfig);
    CHECK(simulate(c, Execution::Serial).values == simulate(c, Execution::Parallel).values);
}

TEST_CASE("report carries the digest, the status and the iteration table") {
    const ExperimentConfig c = parse_config(kSmallConfig);
    TempDir dir;
    ReconstructInput in;
    in.analytic_data = true;
    const ReconstructionReport r = run_reconstruct(c, dir.path(), in);
    CHECK(r.config_digest == c.digest);
    CHECK(r.status == ReconStatus::Converged);

    const std::string text = slurp(dir / "small_report.txt");
    CHECK(text == format_report(r));
    CHECK(text.find("method = fulltime\n") != std::string::npos);
    CHECK(text.find("status = Converged\n") != std::string::npos);
    CHECK(text.find("config_digest = " + c.digest + "\n") != std::string::npos);

    const auto lines = lines_of(text);
    std::size_t header = 0;
    while (header < lines.size() && lines[header].rfind("iter |", 0) != 0) ++header;
    REQUIRE(header < lines.size());
    CHECK(fields(lines[header]) == std::vector<std::string>{"iter", "|", "alpha_1", "|", "b_1", "|", "Lambda", "|", "residual"});
    CHECK(lines.size() - header - 1 == r.history.size());
    const auto row0 = fields(lines[header + 1]);
    CHECK(row0 == std::vector<std::string>{"0", "|", "0.6000", "|", "0.1200", "|", "4.5000", "|"});
    const auto last = fields(lines.back());
    CHECK(last[2] == "0.5000");
    CHECK(last[4] == "0.1000");
    CHECK(last[6] == "4.0000");

    const LaplaceSamples samples = read_laplace_csv(dir / "small_laplace.csv");
    CHECK(samples.abscissae == c.method->laplace.abscissae());
}

TEST_CASE("report plot data: actual and per-iteration transfer functions") {
    const ExperimentConfig c = load_config(kConfigs / "table1.yaml");
    ReconstructInput in;
    in.analytic_data = true;
    const ReconstructionReport r = reconstruct(c, in);
    const auto lines = lines_of(plot_data(r, c));
    const auto head = fields(lines[0]);
    REQUIRE(head.size() == 3 + r.history.size());
    CHECK(head[2] == "actual");
    CHECK(head[3] == "iter0");
    CHECK(head[4] == "iter1");
    CHECK(lines.size() == 1 + c.method->laplace.count);

    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = fields(lines[i]);
        const double s = std::stod(f[0]);
        const double actual = std::stod(f[1]);
        // u1 data: hhat = 1 / (s^2 + sum b s^alpha + Lambda)
        double w = s * s + c.model.big_lambda;
        for (const auto& t : c.model.damping) w += t.b * std::pow(s, t.alpha);
        CHECK(actual == doctest::Approx(1.0 / w).epsilon(1e-14));
        if (s >= std::sqrt(c.model.big_lambda)) {
            CHECK(std::log(actual) < previous);
            previous = std::log(actual);
        }
    }
}

TEST_CASE("identical configs give byte-identical artifacts") {
    const ExperimentConfig c = parse_config(kSmallConfig);
    TempDir a, b;
    run_simulate(c, a.path());
    run_simulate(c, b.path());
    run_reconstruct(c, a.path());
    run_reconstruct(c, b.path());
    for (const char* name : {"small_trace.csv", "small_laplace.csv", "small_report.txt", "small_plot.dat"}) {
        CAPTURE(name);
        CHECK(slurp(a / name) == slurp(b / name));
        CHECK(!slurp(a / name).empty());
    }
}

TEST_CASE("round trip: simulated trace file to full-time recovery") {
    const ExperimentConfig c = load_config(kConfigs / "table1.yaml");
    TempDir dir;
    run_simulate(c, dir.path());
    ReconstructInput in;
    in.trace = read_trace_csv(dir / c.outputs.trace);
    const ReconstructionReport r = run_reconstruct(c, dir.path(), in);
    const auto& d = r.recovered.damping;
    REQUIRE(d.size() == 3);
    CHECK(r.status == ReconStatus::Converged);
    CHECK(r.history.back().iteration <= 6);
    CHECK(r.final_residual() < 1e-5);
    CHECK(std::abs(r.recovered.big_lambda - 4.0) <= 1e-3);
    const double alpha_row[] = {0.2491, 0.5254, 0.7700};
    const double b_row[] = {0.2060, 0.2748, 0.1192};
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(d[k].alpha - alpha_row[k]) <= 0.05);
        CHECK(std::abs(d[k].b - b_row[k]) <= 0.05);
    }
}

// ---------------------------------------------------------------- CLI

TEST_CASE("cli: simulate, transform, poles and verify succeed") {
    TempDir dir;
    put(dir / "small.yaml", kSmallConfig);
    const std::string cfg = "--config \"" + (dir / "small.yaml").string() + "\" --out \"" + dir.path().string() + "\"";

    Run r = cli("simulate " + cfg, dir);
    CHECK(r.code == 0);
    CHECK(read_trace_csv(dir / "small_trace.csv").size() == 4001);

    r = cli("transform " + cfg + " --trace \"" + (dir / "small_trace.csv").string() + "\"", dir);
    CHECK(r.code == 0);
    CHECK(r.out.rfind("s,hhat\n", 0) == 0);
    CHECK(read_laplace_csv(dir / "small_laplace.csv").size() == 24);

    r = cli("poles " + cfg, dir);
    CHECK(r.code == 0);
    CHECK(lines_of(r.out).size() == 2);
    CHECK(r.out.find("pole = ") == 0);

    r = cli("verify " + cfg, dir);
    CHECK(r.code == 0);
    const auto checks = lines_of(r.out);
    CHECK(checks.size() == 4);
    for (const auto& line : checks) CHECK(line.rfind("PASS ", 0) == 0);
}

TEST_CASE("cli: reconstruct prints the report and honours --seed") {
    TempDir dir;
    std::string noisy = kSmallConfig;
    noisy = replaced(noisy, "level: 0.0", "level: 1e-3");
    put(dir / "noisy.yaml", noisy);
    const std::string cfg = "--config \"" + (dir / "noisy.yaml").string() + "\" --out \"" + dir.path().string() + "\"";

    CHECK(cli("simulate " + cfg + " --seed 7", dir).code == 0);
    const std::string first = slurp(dir / "small_trace.csv");
    CHECK(cli("simulate " + cfg + " --seed 7", dir).code == 0);
    CHECK(slurp(dir / "small_trace.csv") == first);
    CHECK(cli("simulate " + cfg + " --seed 8", dir).code == 0);
    CHECK(slurp(dir / "small_trace.csv") != first);

    const Run r = cli("reconstruct " + cfg + " --analytic-data", dir);
    CHECK(r.code == 0);
    CHECK(r.out == slurp(dir / "small_report.txt"));
    CHECK(r.out.find("status = Converged") != std::string::npos);
}

TEST_CASE("cli: exit codes for config, method and io failures") {
    TempDir dir;
    const std::string out = " --out \"" + dir.path().string() + "\"";

    std::string typo = kSmallConfig;
    typo = replaced(typo, "  count: 4001", "  cuont: 4001");
    put(dir / "typo.yaml", typo);
    Run r = cli("simulate --config \"" + (dir / "typo.yaml").string() + "\"" + out, dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("typo.yaml:12:") != std::string::npos);

    CHECK(cli("simulate" + out, dir).code == 2);
    CHECK(cli("frobnicate", dir).code == 2);
    CHECK(cli("simulate --config /nonexistent.yaml", dir).code == 2);

    put(dir / "small.yaml", kSmallConfig);
    const std::string cfg = "--config \"" + (dir / "small.yaml").string() + "\"" + out;
    r = cli("reconstruct " + cfg + " --trace \"" + (dir / "missing.csv").string() + "\"", dir);
    CHECK(r.code == 4);

    std::string bad_start = kSmallConfig;
    bad_start = replaced(bad_start, "b: [0.12]", "b: [-0.1]");
    put(dir / "bad.yaml", bad_start);
    r = cli("reconstruct --config \"" + (dir / "bad.yaml").string() + "\"" + out + " --analytic-data", dir);
    CHECK(r.code == 3);

    std::string outside = kSmallConfig;
    outside = replaced(outside, "alpha: [0.6]", "alpha: [2.5]");
    put(dir / "outside.yaml", outside);
    r = cli("reconstruct --config \"" + (dir / "outside.yaml").string() + "\"" + out + " --analytic-data", dir);
    CHECK(r.code == 3);
    CHECK(slurp(dir / "small_report.txt").find("status = Diverged") != std::string::npos);

    put(dir / "blocker", "x");
    r = cli("simulate " + std::string("--config \"") + (dir / "small.yaml").string() + "\" --out \"" +
                (dir / "blocker").string() + "\"",
            dir);
    CHECK(r.code == 4);
}
