#include "fracwave/mittag_leffler.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "fracwave/error.hpp"
#include "fracwave/special.hpp"

namespace fracwave {

namespace {

constexpr double kPi = std::numbers::pi;

// 1/Gamma(alpha k + beta) for k = 0, 1, ..., grown on demand. The forward
// solver asks for the same (alpha, beta) millions of times.
class RgammaTable {
public:
    const std::vector<double>& get(double alpha, double beta, std::size_t count) {
        Slot* slot = nullptr;
        for (auto& s : slots_) {
            if (s.alpha == alpha && s.beta == beta) {
                slot = &s;
                break;
            }
        }
        if (slot == nullptr) {
            slot = &slots_[next_];
            next_ = (next_ + 1) % slots_.size();
            slot->alpha = alpha;
            slot->beta = beta;
            slot->values.clear();
        }
        while (slot->values.size() < count) {
            const double k = static_cast<double>(slot->values.size());
            slot->values.push_back(special::rgamma(alpha * k + beta));
        }
        return slot->values;
    }

private:
    struct Slot {
        double alpha = -1.0;
        double beta = -1.0;
        std::vector<double> values;
    };
    std::array<Slot, 8> slots_{};
    std::size_t next_ = 0;
};

thread_local RgammaTable rgamma_table;

// Midpoint nodes of the parabolic contour s(u) = mu (1 + iu)^2, u in [-U, U]. Everything
// but the 1 / (s^alpha - z) factor is independent of z, so tables are kept per thread.
struct ContourNodes {
    double alpha = -1.0;
    double beta = -1.0;
    double mu = 0.0;
    int n = 0;
    std::vector<cplx> sa;      // s^alpha
    std::vector<cplx> weight;  // exp(s) s^-beta s'(u) h / (2 pi i) * i
};

class ContourTable {
public:
    const ContourNodes& get(double alpha, double beta, double mu, int n) {
        for (const auto& t : slots_) {
            if (t.n == n && t.alpha == alpha && t.beta == beta && t.mu == mu) return t;
        }
        ContourNodes& t = slots_[next_];
        next_ = (next_ + 1) % slots_.size();
        t.alpha = alpha;
        t.beta = beta;
        t.mu = mu;
        t.n = n;
        t.sa.resize(static_cast<std::size_t>(n));
        t.weight.resize(static_cast<std::size_t>(n));
        const double U = std::sqrt(1.0 + 39.0 / mu);
        const double h = 2.0 * U / n;
        for (int k = 0; k < n; ++k) {
            const double u = -U + (k + 0.5) * h;
            const cplx w(1.0, u);
            const cplx s = mu * w * w;
            const auto i = static_cast<std::size_t>(k);
            t.sa[i] = cpow(s, alpha);
            t.weight[i] = std::exp(s) * cpow(s, -beta) * (2.0 * mu) * w * (h / (2.0 * kPi));
        }
        return t;
    }

private:
    std::array<ContourNodes, 48> slots_{};
    std::size_t next_ = 0;
};

thread_local ContourTable contour_table;

void check_parameters(double alpha, double beta) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0,2], got " + std::to_string(alpha));
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw Error(ErrorCode::InvalidAlpha, "beta must be positive, got " + std::to_string(beta));
    }
}

// Poles s* of s^alpha = z on the principal sheet: s* = |z|^{1/alpha} e^{i(arg z + 2 pi k)/alpha}
// with |arg z + 2 pi k| < alpha pi.
template <typename F>
void for_each_pole(double alpha, cplx z, bool inclusive, F&& f) {
    const double r = std::pow(std::abs(z), 1.0 / alpha);
    const double theta = std::arg(z);
    const int kmax = static_cast<int>(std::ceil(alpha / 2.0)) + 1;
    for (int k = -kmax; k <= kmax; ++k) {
        const double phi = theta + 2.0 * kPi * k;
        const bool inside = inclusive ? std::abs(phi) <= alpha * kPi : std::abs(phi) < alpha * kPi;
        if (inside) f(std::polar(r, phi / alpha));
    }
}

cplx pole_residue(double beta, double alpha, cplx s) {
    return std::exp(s) * cpow(s, 1.0 - beta) / alpha;
}

cplx closed_form(double alpha, double beta, cplx z, bool& found) {
    found = true;
    if (alpha == 1.0) {
        if (beta == 1.0) return std::exp(z);
        if (beta == 2.0) return (std::exp(z) - 1.0) / z;
        if (beta == 3.0) return (std::exp(z) - 1.0 - z) / (z * z);
    }
    if (alpha == 2.0) {
        const cplx r = std::sqrt(z);
        if (beta == 1.0) return std::cosh(r);
        if (beta == 2.0) return std::sinh(r) / r;
    }
    found = false;
    return 0.0;
}

}  // namespace

void MlAccuracy::validate() const {
    if (!(series_radius > 0.0 && series_radius < asymptotic_radius)) {
        throw Error(ErrorCode::InvalidAccuracy, "need 0 < series_radius < asymptotic_radius");
    }
    if (!(target_rel_err > 0.0 && target_rel_err <= 1e-6)) {
        throw Error(ErrorCode::InvalidAccuracy, "target_rel_err must lie in (0, 1e-6]");
    }
}

cplx ml_series(double alpha, double beta, cplx z, double tol) {
    check_parameters(alpha, beta);
    constexpr std::size_t kMaxTerms = 200000;
    cplx sum = 0.0;
    cplx power = 1.0;
    double largest = 0.0;
    int quiet = 0;
    for (std::size_t k = 0; k < kMaxTerms; ++k) {
        const double inv_gamma = rgamma_table.get(alpha, beta, k + 1)[k];
        cplx term;
        if (inv_gamma == 0.0 && alpha * static_cast<double>(k) + beta > 170.0) {
            // Gamma overflowed; fall back to logarithms
            term = std::exp(static_cast<double>(k) * std::log(z) -
                            special::lgamma_abs(alpha * static_cast<double>(k) + beta));
        } else {
            term = power * inv_gamma;
        }
        sum += term;
        const double mag = std::abs(term);
        largest = std::max(largest, mag);
        if (alpha * static_cast<double>(k) + beta > 2.0 &&
            (mag <= tol * std::abs(sum) || mag <= 1e-17 * largest)) {
            if (++quiet >= 2) return sum;
        } else {
            quiet = 0;
        }
        power *= z;
        if (!std::isfinite(std::abs(power))) power = 0.0;
    }
    throw Error(ErrorCode::NoConvergence, "Mittag-Leffler series did not converge");
}

cplx ml_asymptotic(double alpha, double beta, cplx z, double tol) {
    check_parameters(alpha, beta);
    cplx sum = 0.0;
    for_each_pole(alpha, z, true, [&](cplx s) { sum += pole_residue(beta, alpha, s); });

    // Truncation decisions use the envelope |z|^{-j} Gamma(1 - x) / pi of |z^{-j} / Gamma(x)|,
    // x = beta - alpha j, since single terms vanish near the poles of Gamma.
    const cplx zinv = 1.0 / z;
    const double log_r = std::log(std::abs(z));
    cplx power = 1.0;
    double previous = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= 400; ++j) {
        power *= zinv;
        const double x = beta - alpha * j;
        const double rg = special::rgamma(x);
        const double envelope = x > 0.0 ? std::abs(rg) * std::exp(-j * log_r)
                                        : std::exp(special::lgamma_abs(1.0 - x) - j * log_r) / kPi;
        if (envelope > previous && alpha * j > 1.0) break;  // optimal truncation
        sum -= power * rg;
        if (envelope <= tol * std::abs(sum)) break;
        previous = envelope;
    }
    return sum;
}

cplx ml_contour(double alpha, double beta, cplx z, double tol) {
    check_parameters(alpha, beta);
    if (z == cplx(0.0, 0.0)) return special::rgamma(beta);

    // Poles relevant to the contour: those with non-negligible residue.
    std::vector<cplx> poles;
    for_each_pole(alpha, z, false, [&](cplx s) {
        if (s.real() > -60.0) poles.push_back(s);
    });

    // Parabola s(u) = mu (1 + iu)^2 encloses exactly the s with Re sqrt(s/mu) < 1.
    // Pick mu so no relevant pole sits close to the curve.
    constexpr std::array<double, 9> candidates = {4.0, 2.0, 8.0, 6.0, 3.0, 1.0, 12.0, 0.5, 16.0};
    double mu = candidates[0];
    double best_gap = -1.0;
    for (double m : candidates) {
        double gap = std::numeric_limits<double>::infinity();
        for (cplx p : poles) gap = std::min(gap, std::abs(1.0 - std::sqrt(p / m).real()));
        if (gap >= 0.3) {
            mu = m;
            best_gap = gap;
            break;
        }
        if (gap > best_gap) {
            best_gap = gap;
            mu = m;
        }
    }

    cplx residues = 0.0;
    for (cplx p : poles) {
        if (std::sqrt(p / mu).real() > 1.0) residues += pole_residue(beta, alpha, p);
    }

    auto integrate = [&](int n, double& abs_scale) {
        const ContourNodes& nodes = contour_table.get(alpha, beta, mu, n);
        cplx acc = 0.0;
        abs_scale = 0.0;
        for (std::size_t k = 0; k < nodes.sa.size(); ++k) {
            const cplx f = nodes.weight[k] * nodes.sa[k] / (nodes.sa[k] - z);
            acc += f;
            abs_scale += std::abs(f);
        }
        return acc;
    };

    double scale = 0.0;
    cplx previous = integrate(64, scale);
    for (int n = 128; n <= 512; n *= 2) {
        const cplx current = integrate(n, scale);
        const cplx total = current + residues;
        const double diff = std::abs(current - previous);
        if (diff <= tol * std::abs(total) || diff <= 1e-15 * scale) return total;
        previous = current;
    }
    throw Error(ErrorCode::NoConvergence, "contour quadrature did not reach the requested accuracy");
}

cplx ml_scalar(double alpha, double beta, cplx z, const MlAccuracy& acc) {
    check_parameters(alpha, beta);
    acc.validate();
    if (z == cplx(0.0, 0.0)) return special::rgamma(beta);
    const double r = std::abs(z);
    if (r > acc.series_radius) {
        bool found = false;
        const cplx v = closed_form(alpha, beta, z, found);
        if (found) return v;
    }
    if (r <= acc.series_radius) return ml_series(alpha, beta, z, acc.target_rel_err);
    if (r >= acc.asymptotic_radius && alpha <= 1.0) return ml_asymptotic(alpha, beta, z, acc.target_rel_err);
    return ml_contour(alpha, beta, z, acc.target_rel_err);
}

Eigen::MatrixXd ml_matrix(double alpha, double beta, const Eigen::MatrixXd& A, const MlAccuracy& acc,
                          double cond_max) {
    check_parameters(alpha, beta);
    if (A.rows() != A.cols()) throw Error(ErrorCode::InvalidArgument, "ml_matrix needs a square matrix");
    const Eigen::Index n = A.rows();
    if (n == 0) return A;

    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "eigendecomposition failed");
    const Eigen::MatrixXcd V = es.eigenvectors();
    const Eigen::VectorXcd d = es.eigenvalues();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(n - 1);
    if (!(cond <= cond_max)) {
        throw Error(ErrorCode::NearDefective,
                    "eigenvector condition number " + std::to_string(cond) + " exceeds " + std::to_string(cond_max));
    }

    Eigen::VectorXcd e(n);
    for (Eigen::Index i = 0; i < n; ++i) e(i) = ml_scalar(alpha, beta, d(i), acc);
    const Eigen::MatrixXcd R = V * e.asDiagonal() * V.partialPivLu().inverse();

    const double re_norm = R.real().norm();
    const double im_norm = R.imag().norm();
    if (im_norm > 1e-9 * std::max(re_norm, 1e-300)) {
        throw Error(ErrorCode::NoConvergence, "recomposed matrix has a large imaginary part");
    }
    return R.real();
}

}  // namespace fracwave
