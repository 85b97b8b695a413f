#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracwave/error.hpp"
#include "fracwave/reconstruction.hpp"
#include "gauss_newton.hpp"

namespace fracwave {

namespace {

struct GValue {
    double g;
    double dg_dlambda;
};

GValue rearranged_data(double s, double hhat, double big_lambda, const ObservationSetup& setup) {
    if (hhat == 0.0) throw Error(ErrorCode::DataZero, "hhat vanishes at s = " + std::to_string(s));
    switch (setup.kind) {
        case ExcitationKind::InitialVelocity:
            return {setup.scale / hhat - s * s - big_lambda, -1.0};
        case ExcitationKind::Source: {
            const double sh = sigma_hat(setup.sigma, cplx(s, 0.0)).real();
            return {setup.scale * sh / hhat - s * s - big_lambda, -1.0};
        }
        case ExcitationKind::InitialDisplacement: {
            // s hhat / B phi = 1 - Lambda / omega
            const double den = 1.0 - s * hhat / setup.scale;
            if (std::abs(den) < 1e-14) {
                throw Error(ErrorCode::DenominatorZero, "s hhat equals B phi at s = " + std::to_string(s));
            }
            return {big_lambda / den - s * s - big_lambda, 1.0 / den - 1.0};
        }
        case ExcitationKind::InitialAcceleration: break;
    }
    throw Error(ErrorCode::InvalidExcitation, "full-time reconstruction supports u0, u1 and source data");
}

}  // namespace

FulltimeSystem fulltime_system(const FulltimeParams& p, const LaplaceSamples& samples, const ObservationSetup& setup,
                               bool lambda_free, bool log_rows) {
    const std::size_t N = p.b.size();
    if (N == 0 || p.alpha.size() != N) throw Error(ErrorCode::InvalidArgument, "need matching b and alpha vectors");
    const std::size_t unknowns = 2 * N + (lambda_free ? 1 : 0);
    const std::size_t M = samples.size();
    if (M < unknowns) throw Error(ErrorCode::InvalidArgument, "fewer Laplace samples than unknowns");
    const double lam = setup.eigenvalue;

    FulltimeSystem sys;
    sys.residual.resize(static_cast<Eigen::Index>(M));
    sys.jacobian.setZero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(unknowns));
    sys.d_beta.setZero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(N));
    for (std::size_t m = 0; m < M; ++m) {
        const auto row = static_cast<Eigen::Index>(m);
        const double s = samples.abscissae[m];
        const double ls = std::log(s);
        const GValue G = rearranged_data(s, samples.values[m], p.big_lambda, setup);
        double F = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            const double sa = std::pow(s, p.alpha[k]);
            const auto col = static_cast<Eigen::Index>(k);
            F += p.b[k] * lam * sa;
            sys.jacobian(row, col) = lam * sa;
            sys.jacobian(row, col + static_cast<Eigen::Index>(N)) = p.b[k] * lam * ls * sa;
            sys.d_beta(row, col) = p.b[k] * std::log(lam) * lam * sa;
        }
        if (lambda_free) sys.jacobian(row, static_cast<Eigen::Index>(2 * N)) = -G.dg_dlambda;

        if (log_rows && m > 0 && F > 0.0 && G.g > 0.0) {
            sys.residual(row) = std::log(F) - std::log(G.g);
            sys.jacobian.block(row, 0, 1, static_cast<Eigen::Index>(2 * N)) /= F;
            sys.d_beta.row(row) /= F;
            if (lambda_free) sys.jacobian(row, static_cast<Eigen::Index>(2 * N)) = -G.dg_dlambda / G.g;
        } else {
            sys.residual(row) = F - G.g;
        }
    }
    return sys;
}

ReconstructionReport fulltime_newton(const FulltimeParams& initial, const LaplaceSamples& samples,
                                     const ObservationSetup& setup, const FulltimeOptions& opts) {
    samples.validate();
    const std::size_t N = initial.b.size();
    if (N == 0 || initial.alpha.size() != N) throw Error(ErrorCode::InvalidArgument, "need matching b and alpha vectors");
    for (double b : initial.b) {
        if (!(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial coefficients must be positive");
    }
    for (std::size_t k = 1; k < N; ++k) {
        if (!(initial.alpha[k] > initial.alpha[k - 1])) {
            throw Error(ErrorCode::NonMonotoneOrders, "initial orders must be strictly increasing");
        }
    }
    const bool lambda_free = !opts.fix_lambda;
    const int log_iterations = opts.log_iterations.value_or(N == 1 ? 2 : 0);
    const double fixed_lambda = opts.fix_lambda ? setup.big_lambda : initial.big_lambda;

    auto unpack = [&](const Eigen::VectorXd& x) {
        FulltimeParams p;
        p.b.assign(x.data(), x.data() + N);
        p.alpha.assign(x.data() + N, x.data() + 2 * N);
        p.big_lambda = lambda_free ? x(static_cast<Eigen::Index>(2 * N)) : fixed_lambda;
        return p;
    };
    auto admissible = [&](const FulltimeParams& p) {
        if (!(p.big_lambda > 0.0)) return false;
        for (double a : p.alpha)
            if (!std::isfinite(a) || a <= 0.0 || a >= 2.0) return false;
        return true;
    };

    Eigen::VectorXd x0(static_cast<Eigen::Index>(2 * N + (lambda_free ? 1 : 0)));
    for (std::size_t k = 0; k < N; ++k) {
        x0(static_cast<Eigen::Index>(k)) = initial.b[k];
        x0(static_cast<Eigen::Index>(N + k)) = initial.alpha[k];
    }
    if (lambda_free) x0(static_cast<Eigen::Index>(2 * N)) = initial.big_lambda;

    ReconstructionReport report;
    report.method = "fulltime";

    bool log_phase = false;
    int offset = 0;
    detail::GnProblem problem;
    problem.system = [&](const Eigen::VectorXd& x, int, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        const FulltimeParams p = unpack(x);
        if (!admissible(p)) return false;
        try {
            FulltimeSystem sys = fulltime_system(p, samples, setup, lambda_free, log_phase);
            r = std::move(sys.residual);
            if (J) *J = std::move(sys.jacobian);
            return true;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DenominatorZero) return false;
            throw;
        }
    };
    problem.measure = [&](const Eigen::VectorXd& x) {
        const FulltimeParams p = unpack(x);
        if (!admissible(p)) return std::numeric_limits<double>::quiet_NaN();
        return fulltime_system(p, samples, setup, lambda_free, false).residual.norm();
    };
    problem.line_search_on_measure = true;
    problem.normalize = [&](Eigen::VectorXd& x) {
        sort_order_pairs(x.segment(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)), x.segment(0, static_cast<Eigen::Index>(N)));
    };
    problem.record = [&](int k, const Eigen::VectorXd& x, double res) {
        if (k == 0 && offset > 0) return;
        const FulltimeParams p = unpack(x);
        IterationRecord rec;
        rec.iteration = k + offset;
        rec.alpha = p.alpha;
        rec.b = p.b;
        rec.big_lambda = p.big_lambda;
        if (k > 0) rec.residual = res;
        rec.parameters.assign(x.data(), x.data() + x.size());
        report.history.push_back(std::move(rec));
    };

    // The logarithmic rows only propose steps; acceptance is always on the direct residual.
    // A logarithmic phase without an accepted step hands over to the direct phase.
    detail::GnOutcome out;
    bool done = false;
    Eigen::VectorXd start = x0;
    if (log_iterations > 0) {
        GaussNewtonOptions log_opts = opts.gn;
        log_opts.max_iter = std::min(log_iterations, opts.gn.max_iter);
        log_phase = true;
        out = detail::run_gauss_newton(x0, problem, log_opts);
        log_phase = false;
        done = out.status == ReconStatus::Diverged || out.residual < opts.gn.tol || out.iterations >= opts.gn.max_iter;
        if (!done && out.x == x0) report.notes.push_back("logarithmic phase made no progress");
        start = out.x;
        offset = out.iterations;
    }
    if (!done) {
        GaussNewtonOptions direct_opts = opts.gn;
        direct_opts.max_iter = opts.gn.max_iter - offset;
        out = detail::run_gauss_newton(start, problem, direct_opts);
    }
    report.status = out.status;
    if (!out.note.empty()) report.notes.push_back(out.note);

    const FulltimeParams p = unpack(out.x);
    for (std::size_t k = 1; k < N; ++k) {
        if (std::abs(p.alpha[k] - p.alpha[k - 1]) < 1e-4) {
            std::ostringstream os;
            os << "OrderCollision: alpha_" << k << " and alpha_" << k + 1 << " within 1e-4; effectively " << N - 1
               << " terms";
            report.notes.push_back(os.str());
        }
    }
    report.recovered.big_lambda = p.big_lambda;
    report.recovered.eigenvalue = setup.eigenvalue;
    for (std::size_t k = 0; k < N; ++k) report.recovered.damping.push_back({p.alpha[k], 1.0, p.b[k]});
    return report;
}

}  // namespace fracwave
