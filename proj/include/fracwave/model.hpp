#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace fracwave {

using cplx = std::complex<double>;

/// One damping term b * d_t^alpha A^beta.
struct DampingTerm {
    double alpha = 0.0;
    double beta = 1.0;
    double b = 0.0;
};

/// One higher-order term d * d_t^{2+gamma}.
struct HigherTerm {
    double gamma = 0.0;
    double d = 0.0;
};

/// Single-mode damped wave equation
///   w'' + Lambda w + sum_j d_j D^{2+gamma_j} w + sum_k b_k lambda^beta_k D^alpha_k w = f.
///
/// The composite Lambda = c^2 lambda is stored directly. The eigenvalue lambda is
/// only needed to form lambda^beta_k; when absent it is taken as 1, i.e. b_k is
/// read as the effective coefficient b_k lambda^beta_k.
struct DampingModel {
    double big_lambda = 1.0;
    std::optional<double> eigenvalue;
    std::vector<DampingTerm> damping;
    std::vector<HigherTerm> higher;

    double lambda() const { return eigenvalue.value_or(1.0); }
    /// b_k lambda^beta_k
    double effective_b(std::size_t k) const;
    /// c^2 = Lambda / lambda
    double wave_speed_squared() const { return big_lambda / lambda(); }
    bool has_fractional_order() const;
    std::string describe() const;
};

enum class ExcitationKind { InitialDisplacement, InitialVelocity, InitialAcceleration, Source };

std::string to_string(ExcitationKind kind);
ExcitationKind excitation_kind_from_string(const std::string& name);

/// Temporal profile sigma(t) of a separable source. A table is interpolated
/// linearly between knots and held constant after the last knot.
struct SourceProfile {
    enum class Kind { None, Constant, Table };
    Kind kind = Kind::None;
    std::vector<double> times;
    std::vector<double> values;

    static SourceProfile constant() { return {Kind::Constant, {}, {}}; }
    static SourceProfile table(std::vector<double> t, std::vector<double> v) {
        return {Kind::Table, std::move(t), std::move(v)};
    }
    double value_at(double t) const;
};

struct Excitation {
    ExcitationKind kind = ExcitationKind::InitialVelocity;
    double mode_coefficient = 1.0;
    double observation_weight = 1.0;
    SourceProfile sigma;

    /// B phi <datum, phi>
    double scale() const { return mode_coefficient * observation_weight; }
};

/// Returns the model unchanged if all invariants hold, throws fracwave::Error otherwise.
DampingModel validate_model(DampingModel model);
void validate_excitation(const Excitation& exc, const DampingModel& model);

/// Principal-branch power s^a; s = 0 gives 0 for a > 0 and 1 for a = 0.
cplx cpow(cplx s, double a);

/// omega(s) = s^2 + Lambda + sum d_j s^{2+gamma_j} + sum b_k lambda^beta_k s^alpha_k
cplx omega(const DampingModel& model, cplx s);
/// d omega / ds, term by term.
cplx omega_derivative(const DampingModel& model, cplx s);

/// Excitation-specific numerator of the resolvent, without the B phi <.,phi> factor.
cplx resolvent_numerator(const DampingModel& model, const Excitation& exc, cplx s);

/// Laplace transform of the source profile.
cplx sigma_hat(const SourceProfile& sigma, cplx s);

/// Exact Laplace-domain observation hhat(s).
cplx hhat_analytic(const DampingModel& model, const Excitation& exc, cplx s);

}  // namespace fracwave
