#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fracwave/error.hpp"
#include "fracwave/reconstruction.hpp"
#include "fracwave/special.hpp"
#include "gauss_newton.hpp"

namespace fracwave {

namespace {

constexpr double kGammaMargin = 1e-9;

// All compositions of m into n nonnegative parts.
void compositions(int m, std::size_t n, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (cur.size() + 1 == n) {
        cur.push_back(m);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int i = m; i >= 0; --i) {
        cur.push_back(i);
        compositions(m - i, n, cur, out);
        cur.pop_back();
    }
}

std::string index_label(const std::vector<int>& idx) {
    std::ostringstream os;
    os << "(";
    for (std::size_t j = 0; j < idx.size(); ++j) os << (j ? "," : "") << idx[j];
    os << ")";
    return os.str();
}

// -(-1/Lambda)^m multinomial B phi times prod (b_j lambda)^{e_j} with e = index, or
// e = index - unit(j) when `drop` names a coordinate (for d/db_j).
double coefficient(const AsymptoticTerm& term, std::span<const double> b, const ObservationSetup& setup,
                   std::ptrdiff_t drop = -1) {
    double c = -std::pow(-1.0 / setup.big_lambda, term.order) * term.multinomial * setup.scale;
    for (std::size_t j = 0; j < term.index.size(); ++j) {
        int e = term.index[j];
        if (static_cast<std::ptrdiff_t>(j) == drop) {
            if (e == 0) return 0.0;
            c *= e * setup.eigenvalue;
            --e;
        }
        c *= std::pow(b[j] * setup.eigenvalue, e);
    }
    return c;
}

}  // namespace

AsymptoticTermSet AsymptoticTermSet::build(std::span<const double> orders) {
    if (orders.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one order");
    for (double p : orders) {
        if (!(p > 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "orders must be positive");
    }
    AsymptoticTermSet set;
    set.orders.assign(orders.begin(), orders.end());
    const double p_min = *std::min_element(orders.begin(), orders.end());
    set.m_max = std::max(1, static_cast<int>(std::floor(1.0 / p_min)));
    const std::size_t n = orders.size();
    for (int m = 1; m <= set.m_max; ++m) {
        std::vector<std::vector<int>> idx;
        std::vector<int> cur;
        compositions(m, n, cur, idx);
        for (auto& i : idx) {
            AsymptoticTerm t;
            t.index = i;
            t.order = m;
            double lf = std::lgamma(m + 1.0);
            for (std::size_t j = 0; j < n; ++j) {
                t.exponent += orders[j] * i[j];
                lf -= std::lgamma(i[j] + 1.0);
            }
            t.multinomial = std::round(std::exp(lf));
            if (t.exponent < 1.0 - kGammaMargin) set.terms.push_back(std::move(t));
            else set.pruned.push_back(std::move(t));
        }
    }
    return set;
}

int AsymptoticTermSet::leading_term(std::size_t j) const {
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k].order == 1 && terms[k].index[j] == 1) return static_cast<int>(k);
    }
    return -1;
}

LargetimeEval largetime_model(std::span<const double> orders, std::span<const double> coeffs, double t,
                              const AsymptoticTermSet& set) {
    if (coeffs.size() != set.terms.size()) throw Error(ErrorCode::InvalidArgument, "one coefficient per retained term");
    LargetimeEval ev;
    ev.d_orders.assign(orders.size(), 0.0);
    ev.d_coeffs.assign(coeffs.size(), 0.0);
    const double lt = std::log(t);
    for (std::size_t k = 0; k < set.terms.size(); ++k) {
        const auto& term = set.terms[k];
        double e = 0.0;
        for (std::size_t j = 0; j < orders.size(); ++j) e += orders[j] * term.index[j];
        const double arg = 1.0 - e;
        const double basis = std::exp(-e * lt) * special::rgamma(arg);
        ev.value += coeffs[k] * basis;
        ev.d_coeffs[k] = basis;
        const double de = coeffs[k] * basis * (special::digamma(arg) - lt);
        for (std::size_t j = 0; j < orders.size(); ++j) ev.d_orders[j] += de * term.index[j];
    }
    return ev;
}

std::vector<double> composite_coefficients(const AsymptoticTermSet& set, std::span<const double> b,
                                           const ObservationSetup& setup) {
    std::vector<double> c;
    c.reserve(set.terms.size());
    for (const auto& term : set.terms) c.push_back(coefficient(term, b, setup));
    return c;
}

void largetime_system(const LargetimeParams& params, const TimeTrace& window, const ObservationSetup& setup,
                      Eigen::VectorXd& residual, Eigen::MatrixXd& jacobian) {
    const std::size_t N = params.alpha.size();
    const AsymptoticTermSet set = AsymptoticTermSet::build(params.alpha);
    const std::vector<double> c = composite_coefficients(set, params.b, setup);
    // dc_k / db_j
    Eigen::MatrixXd dc(static_cast<Eigen::Index>(set.terms.size()), static_cast<Eigen::Index>(N));
    for (std::size_t k = 0; k < set.terms.size(); ++k) {
        for (std::size_t j = 0; j < N; ++j) {
            dc(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                coefficient(set.terms[k], params.b, setup, static_cast<std::ptrdiff_t>(j));
        }
    }
    const auto rows = static_cast<Eigen::Index>(window.size());
    residual.resize(rows);
    jacobian.setZero(rows, static_cast<Eigen::Index>(2 * N));
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double h = window.values[static_cast<std::size_t>(i)];
        if (h == 0.0) throw Error(ErrorCode::DataZero, "large-time data vanish; relative weights undefined");
        const double w = 1.0 / std::abs(h);
        const LargetimeEval ev = largetime_model(params.alpha, c, window.times[static_cast<std::size_t>(i)], set);
        residual(i) = (ev.value - h) * w;
        const Eigen::Map<const Eigen::VectorXd> dco(ev.d_coeffs.data(), static_cast<Eigen::Index>(ev.d_coeffs.size()));
        for (std::size_t j = 0; j < N; ++j) {
            jacobian(i, static_cast<Eigen::Index>(j)) = ev.d_orders[j] * w;
            jacobian(i, static_cast<Eigen::Index>(N + j)) = dco.dot(dc.col(static_cast<Eigen::Index>(j))) * w;
        }
    }
}

ReconstructionReport largetime_newton(const LargetimeParams& initial, const TimeTrace& trace,
                                      const ObservationSetup& setup, const LargetimeOptions& opts) {
    const std::size_t N = initial.alpha.size();
    if (N == 0 || initial.b.size() != N) throw Error(ErrorCode::InvalidArgument, "need matching alpha and b vectors");
    if (!(opts.t_min > 0.0) || opts.t_max / opts.t_min < 2.0) {
        throw Error(ErrorCode::WindowTooNarrow, "large-time window needs t_max / t_min >= 2");
    }
    trace.validate();
    const TimeTrace window = trace.window(opts.t_min, opts.t_max);
    if (window.size() < 2 * N) throw Error(ErrorCode::InvalidArgument, "too few samples in the large-time window");
    if (window.times.back() / window.times.front() < 2.0) {
        throw Error(ErrorCode::WindowTooNarrow, "samples span less than a factor 2 in time");
    }

    auto unpack = [&](const Eigen::VectorXd& x) {
        LargetimeParams p;
        p.alpha.assign(x.data(), x.data() + N);
        p.b.assign(x.data() + N, x.data() + 2 * N);
        return p;
    };
    auto admissible = [](const LargetimeParams& p) {
        for (double a : p.alpha)
            if (!(a > 0.02) || !std::isfinite(a)) return false;
        return true;
    };

    ReconstructionReport report;
    report.method = "largetime";
    std::set<std::vector<int>> retained_before;

    detail::GnProblem problem;
    problem.system = [&](const Eigen::VectorXd& x, int, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        const LargetimeParams p = unpack(x);
        if (!admissible(p)) return false;
        Eigen::MatrixXd jac;
        largetime_system(p, window, setup, r, jac);
        if (J) *J = std::move(jac);
        return true;
    };
    problem.normalize = [&](Eigen::VectorXd& x) {
        sort_order_pairs(x.segment(0, static_cast<Eigen::Index>(N)), x.segment(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)));
    };
    problem.record = [&](int k, const Eigen::VectorXd& x, double res) {
        const LargetimeParams p = unpack(x);
        IterationRecord rec;
        rec.iteration = k;
        rec.alpha = p.alpha;
        rec.b = p.b;
        if (k > 0) rec.residual = res;
        rec.parameters.assign(x.data(), x.data() + x.size());
        report.history.push_back(std::move(rec));

        if (!admissible(p)) return;
        const AsymptoticTermSet set = AsymptoticTermSet::build(p.alpha);
        std::set<std::vector<int>> retained;
        for (const auto& t : set.terms) retained.insert(t.index);
        if (k == 0) {
            for (const auto& t : set.pruned) {
                report.pruning_log.push_back({0, index_label(t.index), "exponent >= 1 at the initial orders"});
            }
        } else {
            for (const auto& idx : retained_before) {
                if (!retained.count(idx)) report.pruning_log.push_back({k, index_label(idx), "dropped: exponent reached 1"});
            }
            for (const auto& idx : retained) {
                if (!retained_before.count(idx)) report.pruning_log.push_back({k, index_label(idx), "restored: exponent below 1"});
            }
        }
        retained_before = std::move(retained);
    };

    Eigen::VectorXd x0(static_cast<Eigen::Index>(2 * N));
    for (std::size_t j = 0; j < N; ++j) {
        x0(static_cast<Eigen::Index>(j)) = initial.alpha[j];
        x0(static_cast<Eigen::Index>(N + j)) = initial.b[j];
    }
    const detail::GnOutcome out = detail::run_gauss_newton(x0, problem, opts.gn);
    report.status = out.status;
    if (!out.note.empty()) report.notes.push_back(out.note);

    const LargetimeParams p = unpack(out.x);
    report.recovered.big_lambda = setup.big_lambda;
    report.recovered.eigenvalue = setup.eigenvalue;
    for (std::size_t j = 0; j < N; ++j) report.recovered.damping.push_back({p.alpha[j], 1.0, p.b[j]});

    if (out.status != ReconStatus::Diverged) {
        // c_{1,i} / c_{1,1} = b_i / b_1 for beta = 1
        for (std::size_t j = 1; j < N; ++j) {
            const bool beyond_remainder = p.alpha[j] >= 2.0 * p.alpha[0];
            const bool unresolved = p.alpha[j] >= 1.0 - kGammaMargin ||
                                    std::abs(p.b[j]) < opts.mask_ratio * std::abs(p.b[0]);
            if (beyond_remainder && unresolved) {
                report.masked_terms.push_back(j);
                std::ostringstream os;
                os << "term " << j + 1 << " (alpha=" << p.alpha[j] << ", b=" << p.b[j]
                   << ") lies inside the O(t^{-2 alpha_1}) remainder and cannot be separated";
                report.notes.push_back(os.str());
            }
        }
        if (!report.masked_terms.empty()) report.status = ReconStatus::TermMasked;
    }
    return report;
}

}  // namespace fracwave
