#include "fracqubit/error.hpp"

namespace fracqubit {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::non_finite_input: return "NonFiniteInput";
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::divergent_at_origin: return "DivergentAtOrigin";
        case ErrorCode::precision_loss: return "PrecisionLoss";
        case ErrorCode::non_positive_lag: return "NonPositiveLag";
        case ErrorCode::degeneracy_mismatch: return "DegeneracyMismatch";
        case ErrorCode::step_too_coarse: return "StepTooCoarse";
        case ErrorCode::non_convergence: return "NonConvergence";
        case ErrorCode::contour_too_close: return "ContourTooClose";
        case ErrorCode::slow_convergence: return "SlowConvergence";
        case ErrorCode::ill_conditioned: return "IllConditioned";
        case ErrorCode::non_physical_eigenvalue: return "NonPhysicalEigenvalue";
        case ErrorCode::invalid_spec: return "InvalidSpec";
        case ErrorCode::io_failure: return "IoFailure";
        case ErrorCode::gate_failure: return "GateFailure";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace fracqubit
