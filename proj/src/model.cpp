#include "fracwave/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracwave/detail/piecewise_laplace.hpp"
#include "fracwave/error.hpp"

namespace fracwave {

namespace {

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-14; }

void check_strictly_increasing(const std::vector<double>& orders, const char* name) {
    for (std::size_t i = 1; i < orders.size(); ++i) {
        if (orders[i] == orders[i - 1]) {
            throw Error(ErrorCode::DuplicateOrder,
                        std::string(name) + " orders repeat the value " + std::to_string(orders[i]));
        }
        if (orders[i] < orders[i - 1]) {
            throw Error(ErrorCode::NonMonotoneOrders,
                        std::string(name) + " orders must be strictly increasing");
        }
    }
}

void check_not_on_cut(const DampingModel& model, cplx s) {
    if (s.imag() == 0.0 && s.real() < 0.0 && model.has_fractional_order()) {
        throw Error(ErrorCode::BranchCut, "s lies on the negative real axis; offset it by +/-i eps");
    }
}

}  // namespace

double DampingModel::effective_b(std::size_t k) const {
    const auto& term = damping.at(k);
    return term.b * std::pow(lambda(), term.beta);
}

bool DampingModel::has_fractional_order() const {
    for (const auto& t : damping)
        if (!is_integer(t.alpha)) return true;
    for (const auto& t : higher)
        if (!is_integer(t.gamma)) return true;
    return false;
}

std::string DampingModel::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "Lambda=" << big_lambda;
    if (eigenvalue) os << " lambda=" << *eigenvalue;
    for (const auto& t : damping) os << " [alpha=" << t.alpha << " beta=" << t.beta << " b=" << t.b << "]";
    for (const auto& t : higher) os << " [gamma=" << t.gamma << " d=" << t.d << "]";
    return os.str();
}

std::string to_string(ExcitationKind kind) {
    switch (kind) {
        case ExcitationKind::InitialDisplacement: return "u0";
        case ExcitationKind::InitialVelocity: return "u1";
        case ExcitationKind::InitialAcceleration: return "u2";
        case ExcitationKind::Source: return "source";
    }
    return "?";
}

ExcitationKind excitation_kind_from_string(const std::string& name) {
    if (name == "u0" || name == "displacement") return ExcitationKind::InitialDisplacement;
    if (name == "u1" || name == "velocity") return ExcitationKind::InitialVelocity;
    if (name == "u2" || name == "acceleration") return ExcitationKind::InitialAcceleration;
    if (name == "source") return ExcitationKind::Source;
    throw Error(ErrorCode::InvalidExcitation, "unknown excitation kind '" + name + "'");
}

double SourceProfile::value_at(double t) const {
    switch (kind) {
        case Kind::None: return 0.0;
        case Kind::Constant: return 1.0;
        case Kind::Table: break;
    }
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return values[i - 1] * (1.0 - w) + values[i] * w;
}

DampingModel validate_model(DampingModel model) {
    if (!(model.big_lambda > 0.0) || !std::isfinite(model.big_lambda)) {
        throw Error(ErrorCode::NonPositiveLambda, "Lambda must be positive");
    }
    if (model.eigenvalue && !(*model.eigenvalue > 0.0)) {
        throw Error(ErrorCode::NonPositiveLambda, "eigenvalue must be positive");
    }
    std::vector<double> alphas;
    for (const auto& t : model.damping) {
        if (!(t.alpha > 0.0 && t.alpha <= 1.0)) {
            throw Error(ErrorCode::NonMonotoneOrders, "damping order must lie in (0,1], got " + std::to_string(t.alpha));
        }
        if (!(t.beta > 0.5 && t.beta <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "beta must lie in (1/2,1], got " + std::to_string(t.beta));
        }
        if (t.b < 0.0 || !std::isfinite(t.b)) {
            throw Error(ErrorCode::NegativeCoefficient, "damping coefficient must be >= 0");
        }
        if (t.beta != 1.0 && !model.eigenvalue) {
            throw Error(ErrorCode::MissingEigenvalue, "beta != 1 requires the eigenvalue lambda");
        }
        alphas.push_back(t.alpha);
    }
    std::vector<double> gammas;
    for (const auto& t : model.higher) {
        if (!(t.gamma > 0.0 && t.gamma <= 1.0)) {
            throw Error(ErrorCode::NonMonotoneOrders, "higher order must lie in (0,1], got " + std::to_string(t.gamma));
        }
        if (t.d < 0.0 || !std::isfinite(t.d)) {
            throw Error(ErrorCode::NegativeCoefficient, "higher-order coefficient must be >= 0");
        }
        gammas.push_back(t.gamma);
    }
    check_strictly_increasing(alphas, "damping");
    check_strictly_increasing(gammas, "higher");
    if (!gammas.empty()) {
        if (alphas.empty() || gammas.back() > alphas.back()) {
            throw Error(ErrorCode::StabilityViolation, "largest gamma exceeds largest alpha");
        }
    }
    return model;
}

void validate_excitation(const Excitation& exc, const DampingModel& model) {
    if (exc.mode_coefficient == 0.0 || exc.observation_weight == 0.0 ||
        !std::isfinite(exc.mode_coefficient) || !std::isfinite(exc.observation_weight)) {
        throw Error(ErrorCode::InvalidExcitation, "mode coefficient and observation weight must be nonzero");
    }
    if (exc.kind == ExcitationKind::InitialAcceleration && model.higher.empty()) {
        throw Error(ErrorCode::InvalidExcitation, "u2 excitation needs higher-order terms");
    }
    if (exc.kind == ExcitationKind::Source) {
        const auto& sg = exc.sigma;
        if (sg.kind == SourceProfile::Kind::None) {
            throw Error(ErrorCode::InvalidExcitation, "source excitation needs a temporal profile");
        }
        if (sg.kind == SourceProfile::Kind::Table) {
            if (sg.times.size() < 2 || sg.times.size() != sg.values.size()) {
                throw Error(ErrorCode::InvalidExcitation, "source table needs >= 2 (t, sigma) pairs");
            }
            if (sg.times.front() != 0.0) {
                throw Error(ErrorCode::InvalidExcitation, "source table must start at t = 0");
            }
            for (std::size_t i = 1; i < sg.times.size(); ++i) {
                if (!(sg.times[i] > sg.times[i - 1])) {
                    throw Error(ErrorCode::InvalidExcitation, "source table times must increase");
                }
            }
        }
    }
}

cplx cpow(cplx s, double a) {
    if (s == cplx(0.0, 0.0)) return a == 0.0 ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
    if (a == 1.0) return s;
    if (a == 2.0) return s * s;
    return std::exp(a * std::log(s));
}

cplx omega(const DampingModel& model, cplx s) {
    check_not_on_cut(model, s);
    cplx w = s * s + model.big_lambda;
    for (const auto& t : model.higher) w += t.d * cpow(s, 2.0 + t.gamma);
    for (std::size_t k = 0; k < model.damping.size(); ++k) {
        w += model.effective_b(k) * cpow(s, model.damping[k].alpha);
    }
    return w;
}

cplx omega_derivative(const DampingModel& model, cplx s) {
    check_not_on_cut(model, s);
    cplx w = 2.0 * s;
    for (const auto& t : model.higher) w += t.d * (2.0 + t.gamma) * cpow(s, 1.0 + t.gamma);
    for (std::size_t k = 0; k < model.damping.size(); ++k) {
        const double a = model.damping[k].alpha;
        w += model.effective_b(k) * a * cpow(s, a - 1.0);
    }
    return w;
}

cplx sigma_hat(const SourceProfile& sigma, cplx s) {
    switch (sigma.kind) {
        case SourceProfile::Kind::None: return 0.0;
        case SourceProfile::Kind::Constant: return 1.0 / s;
        case SourceProfile::Kind::Table: break;
    }
    cplx acc = 0.0;
    for (std::size_t i = 0; i + 1 < sigma.times.size(); ++i) {
        cplx wa, wb;
        detail::linear_segment_weights(s, sigma.times[i], sigma.times[i + 1], wa, wb);
        acc += std::exp(-s * sigma.times[i]) * (wa * sigma.values[i] + wb * sigma.values[i + 1]);
    }
    acc += sigma.values.back() * std::exp(-s * sigma.times.back()) / s;
    return acc;
}

cplx resolvent_numerator(const DampingModel& model, const Excitation& exc, cplx s) {
    switch (exc.kind) {
        case ExcitationKind::InitialDisplacement: {
            // (omega - Lambda)/s, expanded to avoid cancellation
            cplx n = s;
            for (const auto& t : model.higher) n += t.d * cpow(s, 1.0 + t.gamma);
            for (std::size_t k = 0; k < model.damping.size(); ++k) {
                n += model.effective_b(k) * cpow(s, model.damping[k].alpha - 1.0);
            }
            return n;
        }
        case ExcitationKind::InitialVelocity: {
            cplx n = 1.0;
            for (const auto& t : model.higher) n += t.d * cpow(s, t.gamma);
            return n;
        }
        case ExcitationKind::InitialAcceleration: {
            cplx n = 0.0;
            for (const auto& t : model.higher) n += t.d * cpow(s, t.gamma - 1.0);
            return n;
        }
        case ExcitationKind::Source: return sigma_hat(exc.sigma, s);
    }
    return 0.0;
}

cplx hhat_analytic(const DampingModel& model, const Excitation& exc, cplx s) {
    const cplx w = omega(model, s);
    if (std::abs(w) < 1e-12 * (std::norm(s) + model.big_lambda)) {
        throw Error(ErrorCode::PoleHit, "omega(s) vanishes at the requested s");
    }
    return resolvent_numerator(model, exc, s) * exc.scale() / w;
}

}  // namespace fracwave
