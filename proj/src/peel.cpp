#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracwave/error.hpp"
#include "fracwave/reconstruction.hpp"
#include "fracwave/special.hpp"

namespace fracwave {

namespace {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = y[i] - f.intercept - f.slope * x[i];
        ss += d * d;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

// Relative noise estimate: scatter of log|h| about a quadratic in log t.
double relative_noise(const std::vector<double>& t, const std::vector<double>& h) {
    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lt = std::log(t[static_cast<std::size_t>(i)]);
        A(i, 0) = 1.0;
        A(i, 1) = lt;
        A(i, 2) = lt * lt;
        y(i) = std::log(std::abs(h[static_cast<std::size_t>(i)]));
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    return std::sqrt((A * c - y).squaredNorm() / static_cast<double>(n));
}

}  // namespace

double log_derivative_order(const TimeTrace& trace) {
    trace.validate();
    const std::size_t n = trace.size();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "need two samples");
    const double h0 = trace.values[n - 2], h1 = trace.values[n - 1];
    if (!(h0 > 0.0 && h1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "log-derivative needs positive data");
    return -(std::log(h1) - std::log(h0)) / (std::log(trace.times[n - 1]) - std::log(trace.times[n - 2]));
}

ReconstructionReport sequential_peel(const TimeTrace& trace, const ObservationSetup& setup, const PeelOptions& opts) {
    if (opts.max_terms < 1) throw Error(ErrorCode::InvalidArgument, "max_terms must be >= 1");
    if (!(opts.delta > 0.0 && opts.delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
    if (!(opts.t_min > 0.0) || opts.t_max / opts.t_min < 2.0) {
        throw Error(ErrorCode::WindowTooNarrow, "peel window needs t_max / t_min >= 2");
    }
    trace.validate();
    const TimeTrace win = trace.window(opts.t_min, opts.t_max);
    if (win.size() < 8) throw Error(ErrorCode::InvalidArgument, "too few samples in the peel window");
    for (double v : win.values) {
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "peel needs strictly positive data on the window");
    }

    ReconstructionReport report;
    report.method = "peel";
    report.recovered.big_lambda = setup.big_lambda;
    report.recovered.eigenvalue = setup.eigenvalue;

    const double T = win.times.back();
    double hmax = 0.0;
    for (double v : win.values) hmax = std::max(hmax, std::abs(v));
    const double floor =
        opts.noise_floor ? *opts.noise_floor
                         : std::max(10.0 * relative_noise(win.times, win.values) * hmax, 1e-10 * hmax);
    {
        std::ostringstream os;
        os << "noise floor " << floor;
        report.notes.push_back(os.str());
    }

    // h(t) ~ B phi b lambda / (Lambda Gamma(1 - alpha)) t^{-alpha} for beta = 1
    const double to_b = setup.big_lambda / (setup.eigenvalue * setup.scale);
    std::vector<double> residual = win.values;
    std::vector<double> alphas, bs;
    report.status = ReconStatus::Converged;

    for (int term = 0; term < opts.max_terms; ++term) {
        // fitting range: top decade for the first term, [delta T, T] afterwards
        const double lo = term == 0 ? std::max(win.times.front(), T / 10.0) : std::max(win.times.front(), opts.delta * T);
        std::vector<double> x, y, tt, hv;
        double sign = 0.0;
        bool mixed = false;
        for (std::size_t i = 0; i < win.size(); ++i) {
            if (win.times[i] < lo) continue;
            const double v = residual[i];
            const double sg = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
            if (sign == 0.0) sign = sg;
            else if (sg != sign) mixed = true;
            tt.push_back(win.times[i]);
            hv.push_back(v);
        }
        if (mixed || sign <= 0.0) {
            report.status = ReconStatus::SignLoss;
            std::ostringstream os;
            os << "SignLoss: residual after " << term << " term(s) is not positive on [" << lo << ", " << T << "]";
            report.notes.push_back(os.str());
            break;
        }
        for (std::size_t i = 0; i < tt.size(); ++i) {
            x.push_back(std::log(tt[i]));
            y.push_back(std::log(hv[i]));
        }
        if (x.size() < 3) throw Error(ErrorCode::InvalidArgument, "too few samples in the fitting range");
        const LineFit fit = fit_line(x, y);
        const double alpha = -fit.slope;
        if (!(alpha > 0.0 && alpha < 1.0)) {
            report.status = ReconStatus::Diverged;
            report.notes.push_back("fitted order outside (0,1)");
            break;
        }
        // b from the five largest times
        const std::size_t k = std::min<std::size_t>(5, tt.size());
        double bsum = 0.0;
        for (std::size_t i = tt.size() - k; i < tt.size(); ++i) {
            bsum += hv[i] * std::pow(tt[i], alpha) * special::gamma(1.0 - alpha) * to_b;
        }
        const double b = bsum / static_cast<double>(k);
        alphas.push_back(alpha);
        bs.push_back(b);

        const double c = b / (to_b * special::gamma(1.0 - alpha));
        double rmax = 0.0;
        for (std::size_t i = 0; i < win.size(); ++i) {
            residual[i] -= c * std::pow(win.times[i], -alpha);
            if (win.times[i] >= opts.delta * T) rmax = std::max(rmax, std::abs(residual[i]));
        }
        IterationRecord rec;
        rec.iteration = term + 1;
        rec.alpha = alphas;
        rec.b = bs;
        rec.residual = rmax;
        report.history.push_back(rec);
        if (rmax < floor) break;
    }
    if (report.history.empty()) {
        IterationRecord rec;
        rec.iteration = 0;
        report.history.push_back(rec);
    }

    std::vector<std::size_t> order(alphas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return alphas[a] < alphas[b]; });
    for (std::size_t i : order) report.recovered.damping.push_back({alphas[i], 1.0, bs[i]});
    return report;
}

}  // namespace fracwave
