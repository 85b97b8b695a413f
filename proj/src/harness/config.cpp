#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "fracwave/detail/digest.hpp"
#include "fracwave/error.hpp"
#include "fracwave/harness.hpp"

namespace fracwave {

namespace {

class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        const YAML::Mark m = at.Mark();
        if (m.line >= 0) throw Error(ErrorCode::ConfigError, fmt::format("{}:{}: {}", origin_, m.line + 1, msg));
        throw Error(ErrorCode::ConfigError, fmt::format("{}: {}", origin_, msg));
    }

    void expect_map(const YAML::Node& n, const std::string& where) const {
        if (!n.IsMap()) fail(n, where + " must be a mapping");
    }

    void only_keys(const YAML::Node& n, const std::string& where, std::initializer_list<std::string_view> allowed) const {
        expect_map(n, where);
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            bool known = false;
            for (auto a : allowed) known = known || key == a;
            if (!known) fail(kv.first, fmt::format("unknown key '{}' in {}", key, where));
        }
    }

    template <class T>
    T get(const YAML::Node& parent, const char* key, const std::string& where) const {
        const YAML::Node n = parent[key];
        if (!n) fail(parent, fmt::format("missing key '{}' in {}", key, where));
        return as<T>(n, fmt::format("{}.{}", where, key));
    }

    template <class T>
    std::optional<T> maybe(const YAML::Node& parent, const char* key, const std::string& where) const {
        const YAML::Node n = parent[key];
        if (!n) return std::nullopt;
        return as<T>(n, fmt::format("{}.{}", where, key));
    }

    template <class T>
    T as(const YAML::Node& n, const std::string& where) const {
        if (!n.IsScalar()) fail(n, where + " must be a scalar");
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, fmt::format("cannot read {} from '{}'", where, n.Scalar()));
        }
    }

    std::vector<double> numbers(const YAML::Node& parent, const char* key, const std::string& where) const {
        const YAML::Node n = parent[key];
        const std::string path = fmt::format("{}.{}", where, key);
        if (!n) fail(parent, fmt::format("missing key '{}' in {}", key, where));
        if (!n.IsSequence()) fail(n, path + " must be a list");
        std::vector<double> out;
        for (const auto& v : n) out.push_back(as<double>(v, path));
        return out;
    }

    std::size_t count(const YAML::Node& parent, const char* key, const std::string& where) const {
        const YAML::Node n = parent[key];
        if (!n) fail(parent, fmt::format("missing key '{}' in {}", key, where));
        const auto v = as<long long>(n, fmt::format("{}.{}", where, key));
        if (v < 2) fail(n, fmt::format("{}.{} must be at least 2", where, key));
        return static_cast<std::size_t>(v);
    }

private:
    std::string origin_;
};

DampingModel read_model(const Reader& rd, const YAML::Node& n) {
    rd.only_keys(n, "model", {"big_lambda", "eigenvalue", "damping", "higher"});
    DampingModel m;
    m.big_lambda = rd.get<double>(n, "big_lambda", "model");
    m.eigenvalue = rd.maybe<double>(n, "eigenvalue", "model");
    if (const YAML::Node d = n["damping"]) {
        if (!d.IsSequence()) rd.fail(d, "model.damping must be a list");
        for (const auto& t : d) {
            rd.only_keys(t, "model.damping[]", {"alpha", "beta", "b"});
            m.damping.push_back({rd.get<double>(t, "alpha", "model.damping[]"),
                                 rd.maybe<double>(t, "beta", "model.damping[]").value_or(1.0),
                                 rd.get<double>(t, "b", "model.damping[]")});
        }
    }
    if (const YAML::Node h = n["higher"]) {
        if (!h.IsSequence()) rd.fail(h, "model.higher must be a list");
        for (const auto& t : h) {
            rd.only_keys(t, "model.higher[]", {"gamma", "d"});
            m.higher.push_back({rd.get<double>(t, "gamma", "model.higher[]"), rd.get<double>(t, "d", "model.higher[]")});
        }
    }
    try {
        m = validate_model(m);
    } catch (const Error& e) {
        rd.fail(n, e.what());
    }
    return m;
}

Excitation read_excitation(const Reader& rd, const YAML::Node& n, const DampingModel& model) {
    rd.only_keys(n, "excitation", {"kind", "mode_coefficient", "observation_weight", "source"});
    Excitation e;
    const auto kind = rd.get<std::string>(n, "kind", "excitation");
    try {
        e.kind = excitation_kind_from_string(kind);
    } catch (const Error&) {
        rd.fail(n["kind"], "excitation.kind must be one of u0, u1, u2, source");
    }
    e.mode_coefficient = rd.maybe<double>(n, "mode_coefficient", "excitation").value_or(1.0);
    e.observation_weight = rd.maybe<double>(n, "observation_weight", "excitation").value_or(1.0);
    if (const YAML::Node s = n["source"]) {
        rd.only_keys(s, "excitation.source", {"kind", "times", "values"});
        const auto sk = rd.get<std::string>(s, "kind", "excitation.source");
        if (sk == "constant") {
            e.sigma = SourceProfile::constant();
        } else if (sk == "table") {
            e.sigma = SourceProfile::table(rd.numbers(s, "times", "excitation.source"),
                                           rd.numbers(s, "values", "excitation.source"));
        } else {
            rd.fail(s["kind"], "excitation.source.kind must be constant or table");
        }
    }
    try {
        validate_excitation(e, model);
    } catch (const Error& err) {
        rd.fail(n, err.what());
    }
    return e;
}

SamplingSpec read_sampling(const Reader& rd, const YAML::Node& n) {
    rd.only_keys(n, "sampling", {"grid", "t_min", "t_max", "count"});
    SamplingSpec s;
    const auto grid = rd.maybe<std::string>(n, "grid", "sampling").value_or("uniform");
    if (grid == "uniform") s.grid = SamplingSpec::Grid::Uniform;
    else if (grid == "geometric") s.grid = SamplingSpec::Grid::Geometric;
    else rd.fail(n["grid"], "sampling.grid must be uniform or geometric");
    s.t_min = rd.get<double>(n, "t_min", "sampling");
    s.t_max = rd.get<double>(n, "t_max", "sampling");
    s.count = rd.count(n, "count", "sampling");
    if (!(s.t_max > s.t_min) || s.t_min < 0.0) rd.fail(n, "sampling needs 0 <= t_min < t_max");
    if (s.grid == SamplingSpec::Grid::Geometric && !(s.t_min > 0.0)) rd.fail(n, "a geometric grid needs t_min > 0");
    return s;
}

NoiseSpec read_noise(const Reader& rd, const YAML::Node& n) {
    rd.only_keys(n, "noise", {"level", "seed"});
    NoiseSpec s;
    s.level = rd.maybe<double>(n, "level", "noise").value_or(0.0);
    s.seed = rd.maybe<std::uint64_t>(n, "seed", "noise").value_or(0);
    if (!(s.level >= 0.0)) rd.fail(n, "noise.level must be nonnegative");
    return s;
}

MethodSpec read_method(const Reader& rd, const YAML::Node& n) {
    rd.only_keys(n, "method", {"name", "initial", "max_iter", "tol", "log_iterations", "fix_lambda", "laplace", "window",
                               "max_terms", "delta", "noise_floor"});
    MethodSpec m;
    const auto name = rd.get<std::string>(n, "name", "method");
    if (name == "fulltime") m.kind = MethodSpec::Kind::Fulltime;
    else if (name == "largetime") m.kind = MethodSpec::Kind::Largetime;
    else if (name == "smalltime") m.kind = MethodSpec::Kind::Smalltime;
    else if (name == "peel") m.kind = MethodSpec::Kind::Peel;
    else rd.fail(n["name"], "method.name must be fulltime, largetime, smalltime or peel");

    if (const YAML::Node init = n["initial"]) {
        rd.only_keys(init, "method.initial", {"alpha", "b", "big_lambda"});
        m.alpha = rd.numbers(init, "alpha", "method.initial");
        m.b = rd.numbers(init, "b", "method.initial");
        m.big_lambda = rd.maybe<double>(init, "big_lambda", "method.initial");
        if (m.alpha.size() != m.b.size()) rd.fail(init, "method.initial.alpha and .b differ in length");
    } else if (m.kind != MethodSpec::Kind::Peel) {
        rd.fail(n, "method.initial is required for " + name);
    }
    m.max_iter = rd.maybe<int>(n, "max_iter", "method");
    m.tol = rd.maybe<double>(n, "tol", "method");
    m.log_iterations = rd.maybe<int>(n, "log_iterations", "method");
    m.fix_lambda = rd.maybe<bool>(n, "fix_lambda", "method").value_or(false);
    if (const YAML::Node l = n["laplace"]) {
        rd.only_keys(l, "method.laplace", {"s_min", "s_max", "count"});
        m.laplace.s_min = rd.get<double>(l, "s_min", "method.laplace");
        m.laplace.s_max = rd.get<double>(l, "s_max", "method.laplace");
        m.laplace.count = rd.count(l, "count", "method.laplace");
        if (!(m.laplace.s_min > 0.0 && m.laplace.s_max > m.laplace.s_min)) {
            rd.fail(l, "method.laplace needs 0 < s_min < s_max");
        }
    }
    if (const YAML::Node w = n["window"]) {
        rd.only_keys(w, "method.window", {"t_min", "t_max"});
        m.window_min = rd.get<double>(w, "t_min", "method.window");
        m.window_max = rd.get<double>(w, "t_max", "method.window");
    }
    m.max_terms = rd.maybe<int>(n, "max_terms", "method");
    m.delta = rd.maybe<double>(n, "delta", "method");
    m.noise_floor = rd.maybe<double>(n, "noise_floor", "method");
    if (m.max_iter && *m.max_iter < 0) rd.fail(n["max_iter"], "method.max_iter must be nonnegative");
    return m;
}

OutputSpec read_outputs(const Reader& rd, const YAML::Node& n) {
    rd.only_keys(n, "outputs", {"trace", "laplace", "report", "plot"});
    OutputSpec o;
    o.trace = rd.maybe<std::string>(n, "trace", "outputs").value_or(o.trace);
    o.laplace = rd.maybe<std::string>(n, "laplace", "outputs").value_or(o.laplace);
    o.report = rd.maybe<std::string>(n, "report", "outputs").value_or(o.report);
    o.plot = rd.maybe<std::string>(n, "plot", "outputs").value_or(o.plot);
    return o;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.17g}", i ? "," : "", v[i]);
    return s;
}

template <class T>
std::string opt(const std::optional<T>& v) {
    return v ? fmt::format("{}", *v) : std::string("-");
}

std::string canonical(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "model " << fmt::format("{:.17g}", c.model.big_lambda) << ' ' << opt(c.model.eigenvalue) << '\n';
    for (const auto& t : c.model.damping) os << fmt::format("damping {:.17g} {:.17g} {:.17g}\n", t.alpha, t.beta, t.b);
    for (const auto& t : c.model.higher) os << fmt::format("higher {:.17g} {:.17g}\n", t.gamma, t.d);
    const auto& e = c.excitation;
    os << "excitation " << to_string(e.kind) << fmt::format(" {:.17g} {:.17g} ", e.mode_coefficient, e.observation_weight)
       << static_cast<int>(e.sigma.kind) << ' ' << join(e.sigma.times) << ' ' << join(e.sigma.values) << '\n';
    const auto& s = c.sampling;
    os << fmt::format("sampling {} {:.17g} {:.17g} {}\n", static_cast<int>(s.grid), s.t_min, s.t_max, s.count);
    os << fmt::format("noise {:.17g} {}\n", c.noise.level, c.noise.seed);
    if (c.method) {
        const auto& m = *c.method;
        os << "method " << to_string(m.kind) << ' ' << join(m.alpha) << ' ' << join(m.b) << ' ' << opt(m.big_lambda)
           << ' ' << opt(m.max_iter) << ' ' << opt(m.tol) << ' ' << opt(m.log_iterations) << ' ' << m.fix_lambda
           << fmt::format(" {:.17g} {:.17g} {} ", m.laplace.s_min, m.laplace.s_max, m.laplace.count)
           << opt(m.window_min) << ' ' << opt(m.window_max) << ' ' << opt(m.max_terms) << ' ' << opt(m.delta) << ' '
           << opt(m.noise_floor) << '\n';
    }
    os << "outputs " << c.outputs.trace << ' ' << c.outputs.laplace << ' ' << c.outputs.report << ' ' << c.outputs.plot
       << '\n';
    return os.str();
}

}  // namespace

std::string to_string(MethodSpec::Kind kind) {
    switch (kind) {
        case MethodSpec::Kind::Fulltime: return "fulltime";
        case MethodSpec::Kind::Largetime: return "largetime";
        case MethodSpec::Kind::Smalltime: return "smalltime";
        case MethodSpec::Kind::Peel: return "peel";
    }
    return "unknown";
}

std::vector<double> SamplingSpec::times() const {
    return grid == Grid::Uniform ? uniform_grid(t_min, t_max, count) : geometric_grid(t_min, t_max, count);
}

ObservationSetup ExperimentConfig::observation() const {
    ObservationSetup o;
    o.kind = excitation.kind;
    o.scale = excitation.scale();
    o.big_lambda = model.big_lambda;
    o.eigenvalue = model.lambda();
    o.sigma = excitation.sigma;
    return o;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    const Reader rd(origin);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::ConfigError, fmt::format("{}:{}: {}", origin, e.mark.line + 1, e.msg));
    }
    rd.only_keys(root, "the top level", {"model", "excitation", "sampling", "noise", "method", "outputs"});

    ExperimentConfig c;
    if (!root["model"]) rd.fail(root, "missing section 'model'");
    c.model = read_model(rd, root["model"]);
    if (const YAML::Node n = root["excitation"]) c.excitation = read_excitation(rd, n, c.model);
    if (const YAML::Node n = root["sampling"]) c.sampling = read_sampling(rd, n);
    if (const YAML::Node n = root["noise"]) c.noise = read_noise(rd, n);
    if (const YAML::Node n = root["method"]) c.method = read_method(rd, n);
    if (const YAML::Node n = root["outputs"]) c.outputs = read_outputs(rd, n);
    c.digest = detail::fnv1a_hex(canonical(c));
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
    config.noise.seed = seed;
    config.digest = detail::fnv1a_hex(canonical(config));
}

}  // namespace fracwave
