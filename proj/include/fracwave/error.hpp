#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracwave {

enum class ErrorCode {
    // model-core
    DuplicateOrder,
    NonMonotoneOrders,
    StabilityViolation,
    NonPositiveLambda,
    NegativeCoefficient,
    MissingEigenvalue,
    InvalidExcitation,
    BranchCut,
    PoleHit,
    // mittag-leffler
    InvalidAlpha,
    InvalidAccuracy,
    NoConvergence,
    NearDefective,
    // forward-solver
    IrrationalOrder,
    SystemTooLarge,
    InvalidGrid,
    // laplace-analysis
    GridTooCoarse,
    NewtonDiverged,
    RightHalfPlanePole,
    ZeroDerivative,
    // reconstruction
    DataZero,
    DenominatorZero,
    Diverged,
    WindowTooNarrow,
    NonUniformGrid,
    InvalidArgument,
    // harness
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fracwave
