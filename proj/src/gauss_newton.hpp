#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "fracwave/reconstruction.hpp"

namespace fracwave::detail {

/// Minimum-norm solution of J d = rhs with singular values below rcond * sigma_max dropped.
Eigen::VectorXd tsvd_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& rhs, double rcond, int* rank = nullptr);

struct GnProblem {
    /// Residual (and Jacobian when J is non-null) of the system used at iteration k.
    /// Returns false when x is outside the admissible set.
    std::function<bool(const Eigen::VectorXd& x, int k, Eigen::VectorXd& r, Eigen::MatrixXd* J)> system;
    /// Residual norm reported in the history; defaults to the norm of system(x, k).
    std::function<double(const Eigen::VectorXd& x)> measure;
    /// When set, step halving compares measure() instead of the current system's norm.
    bool line_search_on_measure = false;
    std::function<void(Eigen::VectorXd& x)> normalize;
    std::function<void(int k, const Eigen::VectorXd& x, double residual)> record;
};

struct GnOutcome {
    Eigen::VectorXd x;
    ReconStatus status = ReconStatus::Converged;
    int iterations = 0;
    double residual = 0.0;
    std::string note;
};

/// Damped Gauss-Newton: truncated-SVD steps, halved until the residual of the
/// current system does not increase. plateau > 0 stops with ResidualSaturated
/// after two iterations whose relative decrease stays below it.
GnOutcome run_gauss_newton(Eigen::VectorXd x0, const GnProblem& problem, const GaussNewtonOptions& opts,
                           double plateau = 0.0);

}  // namespace fracwave::detail
