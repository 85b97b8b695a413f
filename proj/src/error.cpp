#include "fracwave/error.hpp"

namespace fracwave {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateOrder: return "DuplicateOrder";
        case ErrorCode::NonMonotoneOrders: return "NonMonotoneOrders";
        case ErrorCode::StabilityViolation: return "StabilityViolation";
        case ErrorCode::NonPositiveLambda: return "NonPositiveLambda";
        case ErrorCode::NegativeCoefficient: return "NegativeCoefficient";
        case ErrorCode::MissingEigenvalue: return "MissingEigenvalue";
        case ErrorCode::InvalidExcitation: return "InvalidExcitation";
        case ErrorCode::BranchCut: return "BranchCut";
        case ErrorCode::PoleHit: return "PoleHit";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::InvalidAccuracy: return "InvalidAccuracy";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::NearDefective: return "NearDefective";
        case ErrorCode::IrrationalOrder: return "IrrationalOrder";
        case ErrorCode::SystemTooLarge: return "SystemTooLarge";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::NewtonDiverged: return "NewtonDiverged";
        case ErrorCode::RightHalfPlanePole: return "RightHalfPlanePole";
        case ErrorCode::ZeroDerivative: return "ZeroDerivative";
        case ErrorCode::DataZero: return "DataZero";
        case ErrorCode::DenominatorZero: return "DenominatorZero";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::WindowTooNarrow: return "WindowTooNarrow";
        case ErrorCode::NonUniformGrid: return "NonUniformGrid";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace fracwave
