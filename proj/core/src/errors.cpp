#include "srhc/errors.hpp"

namespace srhc {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NotLyapunovStable: return "NotLyapunovStable";
    case ErrorKind::NotStabilizable: return "NotStabilizable";
    case ErrorKind::NotBlockDiagonal: return "NotBlockDiagonal";
    case ErrorKind::NotSchur: return "NotSchur";
    case ErrorKind::NotOrthogonal: return "NotOrthogonal";
    case ErrorKind::KappaMismatch: return "KappaMismatch";
    case ErrorKind::NotReachable: return "NotReachable";
    case ErrorKind::InvalidHorizon: return "InvalidHorizon";
    case ErrorKind::SingularInnovationCovariance: return "SingularInnovationCovariance";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateReachability: return "DegenerateReachability";
    case ErrorKind::DegenerateSpec: return "DegenerateSpec";
    case ErrorKind::CausalityViolation: return "CausalityViolation";
    case ErrorKind::InitialInfeasible: return "InitialInfeasible";
    case ErrorKind::SolveFailed: return "SolveFailed";
    case ErrorKind::CacheCorrupt: return "CacheCorrupt";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
    }
    return "Unknown";
}

}  // namespace srhc
