#include "avar/error.hpp"

namespace avar {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NonStochastic: return "NonStochastic";
    case ErrorKind::Reducible: return "Reducible";
    case ErrorKind::Periodic: return "Periodic";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NonPositiveMargin: return "NonPositiveMargin";
    case ErrorKind::EmptySubspace: return "EmptySubspace";
    case ErrorKind::InvalidStart: return "InvalidStart";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidSchedule: return "InvalidSchedule";
    case ErrorKind::InvalidConstants: return "InvalidConstants";
    case ErrorKind::SideConditionViolated: return "SideConditionViolated";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::RowNormViolation: return "RowNormViolation";
    case ErrorKind::InvalidLambda: return "InvalidLambda";
    case ErrorKind::PolicyInducesInvalidChain: return "PolicyInducesInvalidChain";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::DegeneratePoints: return "DegeneratePoints";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

bool is_validation_error(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::SingularSystem:
    case ErrorKind::NonPositiveMargin:
    case ErrorKind::EmptySubspace:
    case ErrorKind::DegeneratePoints:
        return false;
    default:
        return true;
    }
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace avar
