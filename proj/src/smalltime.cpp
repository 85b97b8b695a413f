#include <cmath>

#include "fracwave/error.hpp"
#include "fracwave/reconstruction.hpp"
#include "fracwave/special.hpp"
#include "gauss_newton.hpp"

namespace fracwave {

namespace {

// coef * t^e / Gamma(e + 1) together with its gradient, given the gradients of coef and e.
void add_power(double coef, const Eigen::Vector4d& dcoef, double e, const Eigen::Vector4d& de, double lt,
               SmalltimeEval& ev) {
    const double basis = std::exp(e * lt) * special::rgamma(e + 1.0);
    ev.value += coef * basis;
    ev.gradient += basis * (dcoef + coef * (lt - special::digamma(e + 1.0)) * de);
}

}  // namespace

TimeTrace smalltime_preprocess(const TimeTrace& trace, double big_lambda) {
    trace.validate();
    const std::size_t n = trace.size();
    if (n < 64) throw Error(ErrorCode::InvalidArgument, "small-time preprocessing needs at least 64 samples");
    const double dt = (trace.times.back() - trace.times.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(trace.times[i] - trace.times[i - 1] - dt) > 1e-6 * dt) {
            throw Error(ErrorCode::NonUniformGrid, "small-time data need a uniform grid");
        }
    }
    TimeTrace g;
    g.meta = trace.meta;
    const double inv = 1.0 / (dt * dt);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const double h2 = (trace.values[i + 1] - 2.0 * trace.values[i] + trace.values[i - 1]) * inv;
        g.times.push_back(trace.times[i]);
        g.values.push_back(-big_lambda * trace.values[i] - h2);
    }
    return g;
}

Eigen::Vector4d smalltime_theta(const SmalltimeParams& p, const ObservationSetup& setup) {
    if (p.alpha.size() != 2 || p.b.size() != 2) throw Error(ErrorCode::InvalidArgument, "small-time fit has two terms");
    Eigen::Vector4d theta;
    theta << p.alpha[0], p.alpha[1], setup.scale * p.b[0] * setup.eigenvalue * special::rgamma(2.0 - p.alpha[0]),
        setup.scale * p.b[1] * setup.eigenvalue * special::rgamma(2.0 - p.alpha[1]);
    return theta;
}

SmalltimeParams smalltime_params(const Eigen::Vector4d& theta, const ObservationSetup& setup) {
    SmalltimeParams p;
    p.alpha = {theta(0), theta(1)};
    p.b = {theta(2) * special::gamma(2.0 - theta(0)) / (setup.eigenvalue * setup.scale),
           theta(3) * special::gamma(2.0 - theta(1)) / (setup.eigenvalue * setup.scale)};
    return p;
}

SmalltimeEval smalltime_model(const Eigen::Vector4d& th, double t, const ObservationSetup& setup) {
    SmalltimeEval ev;
    ev.gradient.setZero();
    if (t <= 0.0) return ev;
    const double lt = std::log(t);
    const double a1 = th(0), a2 = th(1);
    const double phi = setup.scale;
    const double lam = setup.big_lambda;

    // B_i = b_i lambda = c_i Gamma(2 - alpha_i) / B phi
    const double g1 = special::gamma(2.0 - a1), g2 = special::gamma(2.0 - a2);
    const double B1 = th(2) * g1 / phi, B2 = th(3) * g2 / phi;
    Eigen::Vector4d dB1(-B1 * special::digamma(2.0 - a1), 0.0, g1 / phi, 0.0);
    Eigen::Vector4d dB2(0.0, -B2 * special::digamma(2.0 - a2), 0.0, g2 / phi);
    const Eigen::Vector4d e1(1, 0, 0, 0), e2(0, 1, 0, 0), e3(0, 0, 1, 0), e4(0, 0, 0, 1);

    // c_1i t^{1-alpha_i}, with c_1i = B phi b_i lambda / Gamma(2-alpha_i)
    const double p1 = std::exp((1.0 - a1) * lt), p2 = std::exp((1.0 - a2) * lt);
    ev.value += th(2) * p1 + th(3) * p2;
    ev.gradient += p1 * e3 + p2 * e4 - th(2) * p1 * lt * e1 - th(3) * p2 * lt * e2;
    // -B phi B_i Lambda t^{3-alpha_i} / Gamma(4-alpha_i)
    add_power(-phi * lam * B1, -phi * lam * dB1, 3.0 - a1, -e1, lt, ev);
    add_power(-phi * lam * B2, -phi * lam * dB2, 3.0 - a2, -e2, lt, ev);
    // -B phi (B_1 s^a1 + B_2 s^a2)^2 s^-4 terms
    add_power(-phi * B1 * B1, -2.0 * phi * B1 * dB1, 3.0 - 2.0 * a1, -2.0 * e1, lt, ev);
    add_power(-2.0 * phi * B1 * B2, -2.0 * phi * (B2 * dB1 + B1 * dB2), 3.0 - a1 - a2, -e1 - e2, lt, ev);
    add_power(-phi * B2 * B2, -2.0 * phi * B2 * dB2, 3.0 - 2.0 * a2, -2.0 * e2, lt, ev);
    return ev;
}

ReconstructionReport smalltime_newton(const SmalltimeParams& initial, const TimeTrace& g_trace,
                                      const ObservationSetup& setup, const SmalltimeOptions& opts) {
    g_trace.validate();
    if (g_trace.size() < 4) throw Error(ErrorCode::InvalidArgument, "too few small-time samples");
    const Eigen::Vector4d theta0 = smalltime_theta(initial, setup);

    auto admissible = [](const Eigen::VectorXd& x) {
        return x(0) > 0.0 && x(0) < 1.5 && x(1) > 0.0 && x(1) < 1.5 && x.allFinite();
    };
    const auto rows = static_cast<Eigen::Index>(g_trace.size());

    ReconstructionReport report;
    report.method = "smalltime";
    detail::GnProblem problem;
    problem.system = [&](const Eigen::VectorXd& x, int, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        if (!admissible(x)) return false;
        const Eigen::Vector4d th = x;
        r.resize(rows);
        if (J) J->resize(rows, 4);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const SmalltimeEval ev = smalltime_model(th, g_trace.times[idx], setup);
            r(i) = ev.value - g_trace.values[idx];
            if (J) J->row(i) = ev.gradient.transpose();
        }
        return true;
    };
    problem.record = [&](int k, const Eigen::VectorXd& x, double res) {
        IterationRecord rec;
        rec.iteration = k;
        if (admissible(x)) {
            const SmalltimeParams p = smalltime_params(x, setup);
            rec.alpha = p.alpha;
            rec.b = p.b;
        } else {
            rec.alpha = {x(0), x(1)};
        }
        if (k > 0) rec.residual = res;
        rec.parameters.assign(x.data(), x.data() + x.size());
        report.history.push_back(std::move(rec));
    };

    const detail::GnOutcome out = detail::run_gauss_newton(theta0, problem, opts.gn, opts.plateau);
    report.status = out.status;
    if (!out.note.empty()) report.notes.push_back(out.note);
    report.recovered.big_lambda = setup.big_lambda;
    report.recovered.eigenvalue = setup.eigenvalue;
    if (admissible(out.x)) {
        const SmalltimeParams p = smalltime_params(out.x, setup);
        for (std::size_t j = 0; j < 2; ++j) report.recovered.damping.push_back({p.alpha[j], 1.0, p.b[j]});
    }
    return report;
}

}  // namespace fracwave
