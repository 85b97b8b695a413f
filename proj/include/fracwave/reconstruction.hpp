#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracwave/forward.hpp"
#include "fracwave/laplace.hpp"
#include "fracwave/model.hpp"

namespace fracwave {

enum class ReconStatus { Converged, ResidualSaturated, Diverged, TermMasked, SignLoss };

std::string to_string(ReconStatus status);

struct IterationRecord {
    int iteration = 0;
    std::vector<double> alpha;
    std::vector<double> b;
    std::optional<double> big_lambda;
    std::optional<double> residual;  // not recorded for iteration 0
    std::vector<double> parameters;  // raw solver vector
};

struct PruneEvent {
    int iteration = 0;
    std::string term;
    std::string reason;
};

struct ReconstructionReport {
    std::string method;
    DampingModel recovered;  // beta fixed at 1
    std::vector<IterationRecord> history;
    ReconStatus status = ReconStatus::Converged;
    std::vector<PruneEvent> pruning_log;
    std::vector<std::string> notes;
    std::vector<std::size_t> masked_terms;
    std::string config_digest;

    double final_residual() const;
};

/// What is known about the observation: the excitation case, the product
/// B phi <datum, phi>, the eigenvalue, and Lambda where it is not an unknown.
struct ObservationSetup {
    ExcitationKind kind = ExcitationKind::InitialVelocity;
    double scale = 1.0;
    double big_lambda = 1.0;
    double eigenvalue = 1.0;
    SourceProfile sigma;
};

/// Sorts orders ascending and applies the same permutation to coeffs (stable for ties).
void sort_order_pairs(Eigen::Ref<Eigen::VectorXd> orders, Eigen::Ref<Eigen::VectorXd> coeffs);

struct GaussNewtonOptions {
    double tol = 1e-8;        // on the residual 2-norm
    double step_tol = 1e-10;  // on the step 2-norm
    int max_iter = 30;
    int max_halvings = 20;
    double rcond = 1e-12;  // singular values below rcond * sigma_max are dropped
    /// A step is accepted once its residual is at most growth * current residual.
    /// Values above 1 let the iteration cross ridges; three growing steps in a row still stop it.
    double growth = 1.0;
};

// ---------------------------------------------------------------- full time

struct FulltimeParams {
    std::vector<double> b;
    std::vector<double> alpha;
    double big_lambda = 1.0;
};

struct FulltimeSystem {
    Eigen::VectorXd residual;   // F(s_m) - G(s_m)
    Eigen::MatrixXd jacobian;   // columns b_1..b_N, alpha_1..alpha_N, Lambda (if free)
    Eigen::MatrixXd d_beta;     // dF/dbeta_k, not part of the solved system
};

/// Residual and Jacobian of sum_k b_k lambda s^alpha_k = G(s) on the samples.
/// log_rows selects the logarithmic form for rows m >= 2.
FulltimeSystem fulltime_system(const FulltimeParams& params, const LaplaceSamples& samples,
                               const ObservationSetup& setup, bool lambda_free = true, bool log_rows = false);

struct FulltimeOptions {
    GaussNewtonOptions gn;
    /// Iterations on the logarithmic system before switching to the direct one.
    /// Unset: 2 for a single term, where the logarithmic rows are linear in alpha, else 0.
    std::optional<int> log_iterations;
    bool fix_lambda = false;
};

ReconstructionReport fulltime_newton(const FulltimeParams& initial, const LaplaceSamples& samples,
                                     const ObservationSetup& setup, const FulltimeOptions& opts = {});

// ---------------------------------------------------------------- large time

struct AsymptoticTerm {
    std::vector<int> index;  // multi-index i_1..i_N
    int order = 0;           // m = |i|
    double exponent = 0.0;   // sum p_j i_j
    double multinomial = 1.0;
};

/// Multi-indices of the singular expansion at s -> 0 with sum p_j i_j < 1.
struct AsymptoticTermSet {
    std::vector<double> orders;
    int m_max = 0;
    std::vector<AsymptoticTerm> terms;
    std::vector<AsymptoticTerm> pruned;  // same depth, exponent >= 1

    static AsymptoticTermSet build(std::span<const double> orders);
    /// Position of the m = 1 term of order j in `terms`, or -1 if pruned.
    int leading_term(std::size_t j) const;
};

struct LargetimeEval {
    double value = 0.0;
    std::vector<double> d_orders;  // d/dp_j
    std::vector<double> d_coeffs;  // d/dc for each retained term
};

/// sum over retained terms of c t^{-e} / Gamma(1-e).
LargetimeEval largetime_model(std::span<const double> orders, std::span<const double> coeffs, double t,
                              const AsymptoticTermSet& terms);

/// c_{m,i} = -(-1/Lambda)^m (m; i) prod (b_j lambda)^{i_j} B phi for every retained term.
std::vector<double> composite_coefficients(const AsymptoticTermSet& terms, std::span<const double> b,
                                           const ObservationSetup& setup);

struct LargetimeOptions {
    GaussNewtonOptions gn{1e-10, 1e-12, 30, 20, 1e-12, 100.0};
    double t_min = 5e4;
    double t_max = 2e5;
    double mask_ratio = 1e-3;
};

struct LargetimeParams {
    std::vector<double> alpha;
    std::vector<double> b;
};

/// Gauss-Newton over (p, b) with the composite coefficients tied to b, relative residuals.
ReconstructionReport largetime_newton(const LargetimeParams& initial, const TimeTrace& trace,
                                      const ObservationSetup& setup, const LargetimeOptions& opts = {});

/// Residual vector and Jacobian of the large-time fit, exposed for testing.
void largetime_system(const LargetimeParams& params, const TimeTrace& window, const ObservationSetup& setup,
                      Eigen::VectorXd& residual, Eigen::MatrixXd& jacobian);

// ---------------------------------------------------------------- peel-off

struct PeelOptions {
    int max_terms = 3;
    double delta = 0.25;
    double t_min = 5e4;
    double t_max = 2e5;
    std::optional<double> noise_floor;  // absolute; estimated from the data when absent
};

ReconstructionReport sequential_peel(const TimeTrace& trace, const ObservationSetup& setup,
                                     const PeelOptions& opts = {});

/// -t h'(t) / h(t) at the last sample, by a one-sided difference in log-log coordinates.
double log_derivative_order(const TimeTrace& trace);

// ---------------------------------------------------------------- small time

/// g(t_i) = -Lambda h(t_i) - h''(t_i) with h'' by central differences; the first
/// and last two samples are dropped.
TimeTrace smalltime_preprocess(const TimeTrace& trace, double big_lambda);

struct SmalltimeParams {
    std::vector<double> alpha;  // two orders
    std::vector<double> b;      // two coefficients
};

struct SmalltimeEval {
    double value = 0.0;
    Eigen::Vector4d gradient;  // d/d(alpha_1, alpha_2, c_11, c_12)
};

/// Seven-term expansion of g at t -> 0 in the unknowns (alpha_1, alpha_2, c_11, c_12).
SmalltimeEval smalltime_model(const Eigen::Vector4d& theta, double t, const ObservationSetup& setup);

Eigen::Vector4d smalltime_theta(const SmalltimeParams& params, const ObservationSetup& setup);
SmalltimeParams smalltime_params(const Eigen::Vector4d& theta, const ObservationSetup& setup);

struct SmalltimeOptions {
    GaussNewtonOptions gn{1e-8, 1e-10, 30, 20, 1e-4};
    double plateau = 1e-3;  // relative residual decrease regarded as stagnation
};

ReconstructionReport smalltime_newton(const SmalltimeParams& initial, const TimeTrace& g_trace,
                                      const ObservationSetup& setup, const SmalltimeOptions& opts = {});

}  // namespace fracwave
