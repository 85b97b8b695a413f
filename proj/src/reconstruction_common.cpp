#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "fracwave/reconstruction.hpp"

namespace fracwave {

std::string to_string(ReconStatus status) {
    switch (status) {
        case ReconStatus::Converged: return "Converged";
        case ReconStatus::ResidualSaturated: return "ResidualSaturated";
        case ReconStatus::Diverged: return "Diverged";
        case ReconStatus::TermMasked: return "TermMasked";
        case ReconStatus::SignLoss: return "SignLoss";
    }
    return "?";
}

void sort_order_pairs(Eigen::Ref<Eigen::VectorXd> orders, Eigen::Ref<Eigen::VectorXd> coeffs) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(orders.size()));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index i, Eigen::Index j) { return orders(i) < orders(j); });
    const Eigen::VectorXd o = orders, c = coeffs;
    for (std::size_t k = 0; k < perm.size(); ++k) {
        orders(static_cast<Eigen::Index>(k)) = o(perm[k]);
        coeffs(static_cast<Eigen::Index>(k)) = c(perm[k]);
    }
}

double ReconstructionReport::final_residual() const {
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (it->residual) return *it->residual;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace fracwave
