#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracwave/mittag_leffler.hpp"
#include "fracwave/model.hpp"

namespace fracwave {

enum class Execution { Serial, Parallel };

/// All model orders written as integer multiples of gamma = 1/M.
struct RationalOrders {
    int M = 1;
    int N = 2;
    std::vector<int> damping_slots;  // alpha_k M
    std::vector<int> higher_slots;   // (2 + gamma_j) M
    double max_error = 0.0;          // largest |order - slot/M|
};

RationalOrders rationalize_orders(const DampingModel& model, double tol = 1e-9, int q_max = 64,
                                  int n_max = 256);

/// D^gamma Y = A Y + e_N f / lead, Y(0) = Y0.
struct CompanionSystem {
    double gamma = 1.0;
    int M = 1;
    int N = 2;
    Eigen::MatrixXd A;
    Eigen::VectorXd Y0;
    int forcing_row = 1;
    double forcing_scale = 1.0;  // 1 / leading coefficient
    RationalOrders orders;
};

CompanionSystem build_companion(const DampingModel& model, const Excitation& exc, double tol = 1e-9,
                                int q_max = 64, int n_max = 256);

struct TraceMeta {
    double horizon = 0.0;
    double noise_level = 0.0;
    std::uint64_t seed = 0;
    std::string model_digest;
    std::string note;
};

struct TimeTrace {
    std::vector<double> times;
    std::vector<double> values;
    TraceMeta meta;

    /// Throws InvalidGrid unless times are strictly increasing and sizes match.
    void validate() const;
    std::size_t size() const { return times.size(); }
    /// Samples with t_min <= t <= t_max.
    TimeTrace window(double t_min, double t_max) const;
};

/// Companion system diagonalized once: Y(t) = V E_{gamma,1}(t^gamma D) V^{-1} Y0.
///
/// The eigenvectors of a companion matrix are Vandermonde columns (1, z, ..., z^{N-1}),
/// so V is formed from the polished roots directly. Rows are rescaled by rho^j with
/// rho the geometric mean root modulus before the condition number is taken.
class ModalSolution {
public:
    ModalSolution(const CompanionSystem& sys, const MlAccuracy& acc, double cond_max = 1e8);

    const Eigen::VectorXcd& roots() const { return roots_; }
    double condition_number() const { return cond_; }
    const CompanionSystem& system() const { return sys_; }

    /// Homogeneous part of y_slot(t).
    double homogeneous(int slot, double t) const;
    /// Several slots at once, sharing the Mittag-Leffler evaluations.
    std::vector<double> homogeneous(std::span<const int> slots, double t) const;
    /// Response of y_slot to a unit step forcing applied from t = 0.
    double step_response(int slot, double t) const;
    /// Response of y_slot to the piecewise-linear forcing sigma sampled on a uniform lattice
    /// of step dt (values sigma[0..]), for all lattice times t = n dt, n < sigma.size().
    std::vector<double> lattice_response(int slot, double dt, std::span<const double> sigma) const;
    /// Same forcing, single arbitrary time t, integrating over a uniform partition of [0,t].
    double direct_response(int slot, double t, const SourceProfile& sigma, int pieces) const;

private:
    cplx kernel1(std::size_t i, double r) const;
    cplx kernel2(std::size_t i, double r) const;

    CompanionSystem sys_;
    MlAccuracy acc_;
    Eigen::VectorXcd roots_;
    Eigen::VectorXcd scaled_roots_;  // z / rho
    double rho_ = 1.0;
    Eigen::VectorXcd coef_;     // homogeneous weights, V^{-1} Y0 in scaled form
    Eigen::VectorXcd forcing_;  // V^{-1} e_N forcing_scale in scaled form
    double cond_ = 1.0;
};

struct SolveOptions {
    MlAccuracy accuracy;
    Execution execution = Execution::Parallel;
    double rational_tol = 1e-9;
    int q_max = 64;
    int n_max = 256;
    double cond_max = 1e8;
    int lattice_steps = 2000;  // source convolution: step <= t_max / lattice_steps
};

/// Observation h(t_i) = B phi <datum, phi> y_0(t_i).
TimeTrace solve_trace(const DampingModel& model, const Excitation& exc, std::span<const double> times,
                      const SolveOptions& opts = {});

/// g(t) = -Lambda h(t) - h''(t), computed from the companion components rather than
/// by differencing. Only for excitations without a source.
TimeTrace solve_damping_force(const DampingModel& model, const Excitation& exc, std::span<const double> times,
                              const SolveOptions& opts = {});

std::vector<double> uniform_grid(double t0, double t1, std::size_t count);
std::vector<double> geometric_grid(double t0, double t1, std::size_t count);

}  // namespace fracwave
