#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srhc {

/// Failure classes raised by validation, estimation and solving.
enum class ErrorKind {
    DimensionMismatch,
    NotPositiveDefinite,
    NotLyapunovStable,
    NotStabilizable,
    NotBlockDiagonal,
    NotSchur,
    NotOrthogonal,
    KappaMismatch,
    NotReachable,
    InvalidHorizon,
    SingularInnovationCovariance,
    NoConvergence,
    DegenerateReachability,
    DegenerateSpec,
    CausalityViolation,
    InitialInfeasible,
    SolveFailed,
    CacheCorrupt,
    Io,
    Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace srhc
