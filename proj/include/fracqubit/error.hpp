#pragma once

#include <stdexcept>
#include <string>

namespace fracqubit {

enum class ErrorCode {
    non_finite_input,
    invalid_argument,
    divergent_at_origin,
    precision_loss,
    non_positive_lag,
    degeneracy_mismatch,
    step_too_coarse,
    non_convergence,
    contour_too_close,
    slow_convergence,
    ill_conditioned,
    non_physical_eigenvalue,
    invalid_spec,
    io_failure,
    gate_failure,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace fracqubit
