#include "gauss_newton.hpp"

#include <cmath>

namespace fracwave::detail {

Eigen::VectorXd tsvd_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& rhs, double rcond, int* rank) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd coeffs = svd.matrixU().transpose() * rhs;
    int kept = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rcond * sv(0) && sv(i) > 0.0) {
            coeffs(i) /= sv(i);
            ++kept;
        } else {
            coeffs(i) = 0.0;
        }
    }
    if (rank) *rank = kept;
    return svd.matrixV() * coeffs;
}

GnOutcome run_gauss_newton(Eigen::VectorXd x, const GnProblem& problem, const GaussNewtonOptions& opts,
                           double plateau) {
    GnOutcome out;
    auto measure = [&](const Eigen::VectorXd& v) {
        if (problem.measure) return problem.measure(v);
        Eigen::VectorXd r;
        return problem.system(v, opts.max_iter + 1, r, nullptr) ? r.norm() : std::numeric_limits<double>::quiet_NaN();
    };

    if (problem.normalize) problem.normalize(x);
    double res = measure(x);
    if (problem.record) problem.record(0, x, res);
    if (!std::isfinite(res)) {
        out.x = x;
        out.status = ReconStatus::Diverged;
        out.residual = res;
        out.note = "initial guess is not admissible";
        return out;
    }

    int growth = 0;
    int stagnant = 0;
    out.status = ReconStatus::ResidualSaturated;
    for (int k = 1; k <= opts.max_iter; ++k) {
        if (res < opts.tol) {
            out.iterations = k;
            if (problem.record) problem.record(k, x, res);
            out.status = ReconStatus::Converged;
            out.note = "start already within tolerance; zero step";
            break;
        }
        Eigen::VectorXd r;
        Eigen::MatrixXd J;
        if (!problem.system(x, k, r, &J) || !r.allFinite() || !J.allFinite()) {
            out.status = ReconStatus::Diverged;
            out.note = "system not evaluable at iteration " + std::to_string(k);
            break;
        }
        const Eigen::VectorXd d = tsvd_solve(J, -r, opts.rcond);
        const double base = opts.growth * (problem.line_search_on_measure ? res : r.norm());

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            trial = x + t * d;
            if (problem.line_search_on_measure) {
                const double mt = measure(trial);
                if (std::isfinite(mt) && mt <= base) {
                    accepted = true;
                    break;
                }
            } else {
                Eigen::VectorXd rt;
                if (problem.system(trial, k, rt, nullptr) && rt.allFinite() && rt.norm() <= base) {
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        out.iterations = k;
        if (!accepted) {
            if (problem.record) problem.record(k, x, res);
            out.note = "no descent direction after step halving";
            out.status = res < opts.tol ? ReconStatus::Converged : ReconStatus::ResidualSaturated;
            break;
        }
        x = trial;
        if (problem.normalize) problem.normalize(x);
        const double previous = res;
        res = measure(x);
        if (problem.record) problem.record(k, x, res);
        if (!std::isfinite(res)) {
            out.status = ReconStatus::Diverged;
            break;
        }

        growth = res > previous ? growth + 1 : 0;
        if (growth >= 3) {
            out.status = ReconStatus::Diverged;
            out.note = "residual grew over three consecutive damped steps";
            break;
        }
        if (res < opts.tol) {
            out.status = ReconStatus::Converged;
            break;
        }
        if ((t * d).norm() < opts.step_tol) {
            out.status = ReconStatus::Converged;
            out.note = "step below tolerance";
            break;
        }
        if (plateau > 0.0) {
            stagnant = (previous - res) < plateau * previous ? stagnant + 1 : 0;
            if (stagnant >= 2) {
                out.status = ReconStatus::ResidualSaturated;
                out.note = "residual plateau";
                break;
            }
        }
        if (k == opts.max_iter) out.note = "iteration limit reached";
    }
    out.x = x;
    out.residual = res;
    return out;
}

}  // namespace fracwave::detail
