#include "fracwave/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fracwave/detail/digest.hpp"
#include "fracwave/detail/parallel.hpp"
#include "fracwave/error.hpp"

namespace fracwave {

namespace {

// Smallest denominator q <= q_max with |x - p/q| <= tol; returns false and the
// best error seen when there is none.
bool small_rational(double x, double tol, int q_max, long& p_out, int& q_out, double& err_out) {
    err_out = std::numeric_limits<double>::infinity();
    for (int q = 1; q <= q_max; ++q) {
        const long p = std::lround(x * q);
        const double err = std::abs(x - static_cast<double>(p) / q);
        if (err < err_out) err_out = err;
        if (err <= tol) {
            p_out = p;
            q_out = q;
            err_out = err;
            return true;
        }
    }
    return false;
}

std::string excitation_tag(const Excitation& exc) {
    std::ostringstream os;
    os.precision(17);
    os << to_string(exc.kind) << " coef=" << exc.mode_coefficient << " weight=" << exc.observation_weight;
    if (exc.kind == ExcitationKind::Source) {
        os << " sigma=" << static_cast<int>(exc.sigma.kind);
        for (std::size_t i = 0; i < exc.sigma.times.size(); ++i) {
            os << " " << exc.sigma.times[i] << ":" << exc.sigma.values[i];
        }
    }
    return os.str();
}

void check_times(std::span<const double> times) {
    if (times.empty()) throw Error(ErrorCode::InvalidGrid, "time grid is empty");
    if (!(times.front() >= 0.0)) throw Error(ErrorCode::InvalidGrid, "time grid must start at t >= 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw Error(ErrorCode::InvalidGrid, "time grid must be strictly increasing");
    }
}

DampingModel perturbed(const DampingModel& model) {
    DampingModel p = model;
    for (std::size_t k = 0; k < p.damping.size(); ++k) p.damping[k].b *= 1.0 + 1e-7 * static_cast<double>(k + 1);
    for (std::size_t j = 0; j < p.higher.size(); ++j) p.higher[j].d *= 1.0 + 1e-7 * static_cast<double>(j + 1);
    p.big_lambda *= 1.0 + 1e-7;
    return p;
}

// Factorizes the companion system, retrying once on a perturbed model when the
// eigenvectors are nearly dependent.
ModalSolution factor(const DampingModel& model, const Excitation& exc, const SolveOptions& opts, std::string& note) {
    try {
        return ModalSolution(build_companion(model, exc, opts.rational_tol, opts.q_max, opts.n_max), opts.accuracy,
                             opts.cond_max);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NearDefective) throw;
    }
    const DampingModel p = perturbed(model);
    try {
        ModalSolution sol(build_companion(p, exc, opts.rational_tol, opts.q_max, opts.n_max), opts.accuracy,
                          opts.cond_max);
        note = "near-defective companion matrix; coefficients perturbed by relative k*1e-7";
        return sol;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NearDefective) throw;
        throw Error(ErrorCode::NearDefective,
                    std::string(e.what()) + "; perturb the damping orders by about 1e-7 and retry");
    }
}

// Uniform lattice containing every output time, or step 0 if the grid is not uniform.
double aligned_step(std::span<const double> times) {
    if (times.size() < 2) return 0.0;
    const double h = times[1] - times[0];
    const double t_max = times.back();
    const double offset = times[0] / h;
    if (std::abs(offset - std::round(offset)) > 1e-9) return 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::abs(times[i] - (times[0] + static_cast<double>(i) * h)) > 1e-9 * t_max) return 0.0;
    }
    return h;
}

}  // namespace

RationalOrders rationalize_orders(const DampingModel& model, double tol, int q_max, int n_max) {
    RationalOrders r;
    long lcm = 1;
    std::vector<std::pair<long, int>> dam, hig;
    auto take = [&](double x, std::vector<std::pair<long, int>>& out) {
        long p = 0;
        int q = 1;
        double err = 0.0;
        if (!small_rational(x, tol, q_max, p, q, err)) {
            std::ostringstream os;
            os << "order " << x << " has no rational approximation with denominator <= " << q_max
               << " within " << tol << "; smallest achievable error " << err;
            throw Error(ErrorCode::IrrationalOrder, os.str());
        }
        r.max_error = std::max(r.max_error, err);
        lcm = std::lcm(lcm, static_cast<long>(q));
        if (lcm > n_max) throw Error(ErrorCode::SystemTooLarge, "common denominator exceeds the system size limit");
        out.emplace_back(p, q);
    };
    for (const auto& t : model.damping) take(t.alpha, dam);
    for (const auto& t : model.higher) take(t.gamma, hig);

    r.M = static_cast<int>(lcm);
    for (auto [p, q] : dam) r.damping_slots.push_back(static_cast<int>(p * (lcm / q)));
    for (auto [p, q] : hig) r.higher_slots.push_back(static_cast<int>(2 * lcm + p * (lcm / q)));
    const long n = hig.empty() ? 2 * lcm : r.higher_slots.back();
    if (n > n_max) {
        throw Error(ErrorCode::SystemTooLarge,
                    "companion dimension " + std::to_string(n) + " exceeds " + std::to_string(n_max));
    }
    r.N = static_cast<int>(n);
    return r;
}

CompanionSystem build_companion(const DampingModel& model, const Excitation& exc, double tol, int q_max, int n_max) {
    CompanionSystem sys;
    sys.orders = rationalize_orders(model, tol, q_max, n_max);
    const int M = sys.orders.M;
    const int N = sys.orders.N;
    sys.M = M;
    sys.N = N;
    sys.gamma = 1.0 / M;

    const bool has_higher = !model.higher.empty();
    const double lead = has_higher ? model.higher.back().d : 1.0;
    if (!(lead > 0.0)) throw Error(ErrorCode::InvalidArgument, "leading higher-order coefficient must be positive");

    sys.A = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i + 1 < N; ++i) sys.A(i, i + 1) = 1.0;
    auto& last = sys.A;
    last(N - 1, 0) -= model.big_lambda / lead;
    for (std::size_t k = 0; k < model.damping.size(); ++k) {
        last(N - 1, sys.orders.damping_slots[k]) -= model.effective_b(k) / lead;
    }
    if (has_higher) {
        last(N - 1, 2 * M) -= 1.0 / lead;
        for (std::size_t j = 0; j + 1 < model.higher.size(); ++j) {
            last(N - 1, sys.orders.higher_slots[j]) -= model.higher[j].d / lead;
        }
    }

    sys.Y0 = Eigen::VectorXd::Zero(N);
    switch (exc.kind) {
        case ExcitationKind::InitialDisplacement: sys.Y0(0) = 1.0; break;
        case ExcitationKind::InitialVelocity: sys.Y0(M) = 1.0; break;
        case ExcitationKind::InitialAcceleration:
            if (2 * M >= N) throw Error(ErrorCode::InvalidExcitation, "u2 excitation needs higher-order terms");
            sys.Y0(2 * M) = 1.0;
            break;
        case ExcitationKind::Source: break;
    }
    sys.forcing_row = N - 1;
    sys.forcing_scale = 1.0 / lead;
    return sys;
}

void TimeTrace::validate() const {
    if (times.size() != values.size()) throw Error(ErrorCode::InvalidGrid, "times and values differ in length");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw Error(ErrorCode::InvalidGrid, "trace times must be strictly increasing");
    }
}

TimeTrace TimeTrace::window(double t_min, double t_max) const {
    TimeTrace out;
    out.meta = meta;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= t_min && times[i] <= t_max) {
            out.times.push_back(times[i]);
            out.values.push_back(values[i]);
        }
    }
    return out;
}

ModalSolution::ModalSolution(const CompanionSystem& sys, const MlAccuracy& acc, double cond_max)
    : sys_(sys), acc_(acc) {
    acc_.validate();
    const int N = sys.N;
    // characteristic polynomial z^N - sum_j a_j z^j
    Eigen::VectorXd a = sys.A.row(N - 1).transpose();
    const double a0 = std::abs(a(0));
    rho_ = a0 > 0.0 ? std::pow(a0, 1.0 / N) : 1.0;

    Eigen::VectorXd as(N);
    for (int j = 0; j < N; ++j) as(j) = a(j) * std::pow(rho_, j - N);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i + 1 < N; ++i) C(i, i + 1) = 1.0;
    C.row(N - 1) = as.transpose();

    Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "companion eigenvalues failed");
    scaled_roots_ = es.eigenvalues();

    auto poly = [&](cplx x, cplx& dp) {
        cplx p = 1.0;
        dp = 0.0;
        for (int j = N - 1; j >= 0; --j) {
            dp = dp * x + p;
            p = p * x - as(j);
        }
        return p;
    };
    for (Eigen::Index i = 0; i < scaled_roots_.size(); ++i) {
        cplx x = scaled_roots_(i);
        for (int it = 0; it < 3; ++it) {
            cplx dp;
            const cplx p = poly(x, dp);
            if (dp == cplx(0.0)) break;
            const cplx y = x - p / dp;
            cplx dq;
            if (std::abs(poly(y, dq)) < std::abs(p)) x = y;
            else break;
        }
        scaled_roots_(i) = x;
    }
    roots_ = rho_ * scaled_roots_;

    Eigen::MatrixXcd W(N, N);
    for (int i = 0; i < N; ++i) {
        cplx p = 1.0;
        for (int j = 0; j < N; ++j) {
            W(j, i) = p;
            p *= scaled_roots_(i);
        }
    }
    Eigen::MatrixXcd Wn = W;
    for (int i = 0; i < N; ++i) Wn.col(i) /= W.col(i).norm();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Wn);
    const auto& sv = svd.singularValues();
    cond_ = sv(0) / sv(N - 1);
    if (!(cond_ <= cond_max)) {
        throw Error(ErrorCode::NearDefective, "eigenvector condition number " + std::to_string(cond_) +
                                                  " exceeds " + std::to_string(cond_max));
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(W);
    Eigen::VectorXcd y0(N), e(N);
    for (int j = 0; j < N; ++j) {
        y0(j) = sys.Y0(j) * std::pow(rho_, -j);
        e(j) = 0.0;
    }
    e(N - 1) = sys.forcing_scale * std::pow(rho_, -(N - 1));
    coef_ = lu.solve(y0);
    forcing_ = lu.solve(e);
}

std::vector<double> ModalSolution::homogeneous(std::span<const int> slots, double t) const {
    std::vector<cplx> acc(slots.size(), 0.0);
    const double tg = std::pow(t, sys_.gamma);
    for (Eigen::Index i = 0; i < roots_.size(); ++i) {
        const cplx E = t == 0.0 ? cplx(1.0) : ml_scalar(sys_.gamma, 1.0, tg * roots_(i), acc_);
        const cplx w = coef_(i) * E;
        for (std::size_t k = 0; k < slots.size(); ++k) acc[k] += w * std::pow(scaled_roots_(i), slots[k]);
    }
    std::vector<double> out(slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) out[k] = acc[k].real() * std::pow(rho_, slots[k]);
    return out;
}

double ModalSolution::homogeneous(int slot, double t) const {
    const int s[1] = {slot};
    return homogeneous(std::span<const int>(s, 1), t)[0];
}

cplx ModalSolution::kernel1(std::size_t i, double r) const {
    if (r <= 0.0) return 0.0;
    const double rg = std::pow(r, sys_.gamma);
    return rg * ml_scalar(sys_.gamma, sys_.gamma + 1.0, rg * roots_(static_cast<Eigen::Index>(i)), acc_);
}

cplx ModalSolution::kernel2(std::size_t i, double r) const {
    if (r <= 0.0) return 0.0;
    const double rg = std::pow(r, sys_.gamma);
    return r * rg * ml_scalar(sys_.gamma, sys_.gamma + 2.0, rg * roots_(static_cast<Eigen::Index>(i)), acc_);
}

double ModalSolution::step_response(int slot, double t) const {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < roots_.size(); ++i) {
        acc += forcing_(i) * std::pow(scaled_roots_(i), slot) * kernel1(static_cast<std::size_t>(i), t);
    }
    return acc.real() * std::pow(rho_, slot);
}

std::vector<double> ModalSolution::lattice_response(int slot, double dt, std::span<const double> sigma) const {
    const std::size_t L = sigma.size();
    std::vector<cplx> total(L, 0.0);
    std::vector<cplx> k1(L), k2(L), i0(L), i1(L);
    for (Eigen::Index i = 0; i < roots_.size(); ++i) {
        const auto mode = static_cast<std::size_t>(i);
        for (std::size_t k = 0; k < L; ++k) {
            k1[k] = kernel1(mode, static_cast<double>(k) * dt);
            k2[k] = kernel2(mode, static_cast<double>(k) * dt);
        }
        for (std::size_t k = 1; k < L; ++k) {
            i0[k] = k1[k] - k1[k - 1];
            i1[k] = (k2[k] - k2[k - 1]) / dt - k1[k - 1];
        }
        const cplx g = forcing_(i) * std::pow(scaled_roots_(i), slot);
        for (std::size_t n = 1; n < L; ++n) {
            cplx acc = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                acc += sigma[n - k] * (i0[k] - i1[k]) + sigma[n - k + 1] * i1[k];
            }
            total[n] += g * acc;
        }
    }
    std::vector<double> out(L);
    const double scale = std::pow(rho_, slot);
    for (std::size_t n = 0; n < L; ++n) out[n] = total[n].real() * scale;
    return out;
}

double ModalSolution::direct_response(int slot, double t, const SourceProfile& sigma, int pieces) const {
    if (t <= 0.0) return 0.0;
    pieces = std::max(pieces, 1);
    const double dt = t / pieces;
    std::vector<double> f(static_cast<std::size_t>(pieces) + 1);
    for (std::size_t m = 0; m < f.size(); ++m) f[m] = sigma.value_at(static_cast<double>(m) * dt);
    return lattice_response(slot, dt, f).back();
}

TimeTrace solve_trace(const DampingModel& model_in, const Excitation& exc, std::span<const double> times,
                      const SolveOptions& opts) {
    const DampingModel model = validate_model(model_in);
    validate_excitation(exc, model);
    check_times(times);

    TimeTrace trace;
    trace.times.assign(times.begin(), times.end());
    trace.values.assign(times.size(), 0.0);
    trace.meta.horizon = times.back();
    trace.meta.model_digest = detail::fnv1a_hex(model.describe() + " " + excitation_tag(exc));

    const ModalSolution sol = factor(model, exc, opts, trace.meta.note);
    const double scale = exc.scale();
    const bool parallel = opts.execution == Execution::Parallel;
    const auto n = static_cast<std::ptrdiff_t>(times.size());

    if (exc.kind != ExcitationKind::Source) {
        detail::for_each_index(n, parallel, [&](std::ptrdiff_t i) {
            trace.values[static_cast<std::size_t>(i)] = scale * sol.homogeneous(0, times[static_cast<std::size_t>(i)]);
        });
        return trace;
    }
    if (exc.sigma.kind == SourceProfile::Kind::Constant) {
        detail::for_each_index(n, parallel, [&](std::ptrdiff_t i) {
            trace.values[static_cast<std::size_t>(i)] = scale * sol.step_response(0, times[static_cast<std::size_t>(i)]);
        });
        return trace;
    }

    const double t_max = times.back();
    const double max_step = t_max / opts.lattice_steps;
    const double h = aligned_step(times);
    if (h > 0.0) {
        const int refine = std::max(1, static_cast<int>(std::ceil(h / max_step - 1e-9)));
        const double dt = h / refine;
        const auto L = static_cast<std::size_t>(std::llround(t_max / dt)) + 1;
        std::vector<double> f(L);
        for (std::size_t m = 0; m < L; ++m) f[m] = exc.sigma.value_at(static_cast<double>(m) * dt);
        const std::vector<double> y = sol.lattice_response(0, dt, f);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const auto idx = static_cast<std::size_t>(std::llround(times[i] / dt));
            trace.values[i] = scale * y[std::min(idx, L - 1)];
        }
        return trace;
    }
    detail::for_each_index(n, parallel, [&](std::ptrdiff_t i) {
        const double t = times[static_cast<std::size_t>(i)];
        const int pieces = static_cast<int>(std::ceil(t / max_step));
        trace.values[static_cast<std::size_t>(i)] = scale * sol.direct_response(0, t, exc.sigma, pieces);
    });
    return trace;
}

TimeTrace solve_damping_force(const DampingModel& model_in, const Excitation& exc, std::span<const double> times,
                              const SolveOptions& opts) {
    const DampingModel model = validate_model(model_in);
    validate_excitation(exc, model);
    check_times(times);
    if (exc.kind == ExcitationKind::Source || !model.higher.empty()) {
        throw Error(ErrorCode::InvalidArgument, "damping force needs an initial-value excitation without higher terms");
    }
    TimeTrace trace;
    trace.times.assign(times.begin(), times.end());
    trace.values.assign(times.size(), 0.0);
    trace.meta.horizon = times.back();
    trace.meta.model_digest = detail::fnv1a_hex(model.describe() + " " + excitation_tag(exc) + " force");

    const ModalSolution sol = factor(model, exc, opts, trace.meta.note);
    const auto& slots = sol.system().orders.damping_slots;
    std::vector<double> weights;
    for (std::size_t k = 0; k < model.damping.size(); ++k) weights.push_back(model.effective_b(k) * exc.scale());

    detail::for_each_index(static_cast<std::ptrdiff_t>(times.size()), opts.execution == Execution::Parallel,
                           [&](std::ptrdiff_t i) {
                               const auto idx = static_cast<std::size_t>(i);
                               const auto y = sol.homogeneous(slots, times[idx]);
                               double g = 0.0;
                               for (std::size_t k = 0; k < y.size(); ++k) g += weights[k] * y[k];
                               trace.values[idx] = g;
                           });
    return trace;
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t count) {
    if (count < 2 || !(t1 > t0)) throw Error(ErrorCode::InvalidGrid, "uniform grid needs count >= 2 and t1 > t0");
    std::vector<double> g(count);
    const double h = (t1 - t0) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) g[i] = t0 + static_cast<double>(i) * h;
    g.back() = t1;
    return g;
}

std::vector<double> geometric_grid(double t0, double t1, std::size_t count) {
    if (count < 2 || !(t0 > 0.0) || !(t1 > t0)) {
        throw Error(ErrorCode::InvalidGrid, "geometric grid needs count >= 2 and 0 < t0 < t1");
    }
    std::vector<double> g(count);
    const double r = std::log(t1 / t0) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) g[i] = t0 * std::exp(r * static_cast<double>(i));
    g.front() = t0;
    g.back() = t1;
    return g;
}

}  // namespace fracwave
