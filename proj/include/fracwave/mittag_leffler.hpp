#pragma once

#include <Eigen/Dense>

#include "fracwave/model.hpp"

namespace fracwave {

struct MlAccuracy {
    double target_rel_err = 1e-12;
    double series_radius = 1.0;
    double asymptotic_radius = 50.0;

    /// Throws InvalidAccuracy unless 0 < series_radius < asymptotic_radius
    /// and target_rel_err lies in (0, 1e-6].
    void validate() const;
};

/// Two-parameter Mittag-Leffler function E_{alpha,beta}(z), 0 < alpha <= 2, beta > 0.
///
/// Dispatch: closed forms for (1,1), (1,2), (1,3), (2,1), (2,2); Taylor series
/// for |z| <= series_radius; asymptotic expansion for |z| >= asymptotic_radius
/// (alpha <= 1 only); parabolic-contour inversion otherwise.
cplx ml_scalar(double alpha, double beta, cplx z, const MlAccuracy& acc = {});

// The individual regimes, exposed for cross-checking. Each one is valid
// wherever it converges; ml_scalar picks the cheapest accurate one.
cplx ml_series(double alpha, double beta, cplx z, double tol);
cplx ml_asymptotic(double alpha, double beta, cplx z, double tol);
cplx ml_contour(double alpha, double beta, cplx z, double tol);

/// E_{alpha,beta}(A) through the eigendecomposition A = V D V^{-1}.
/// Throws NearDefective when cond(V) exceeds cond_max.
Eigen::MatrixXd ml_matrix(double alpha, double beta, const Eigen::MatrixXd& A,
                          const MlAccuracy& acc = {}, double cond_max = 1e8);

}  // namespace fracwave
