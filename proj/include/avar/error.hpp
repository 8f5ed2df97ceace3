#pragma once

#include <stdexcept>
#include <string>

namespace avar {

enum class ErrorKind {
    NonStochastic,
    Reducible,
    Periodic,
    SingularSystem,
    NonPositiveMargin,
    EmptySubspace,
    InvalidStart,
    InvalidState,
    DimensionMismatch,
    InvalidSchedule,
    InvalidConstants,
    SideConditionViolated,
    RankDeficient,
    RowNormViolation,
    InvalidLambda,
    PolicyInducesInvalidChain,
    TooShort,
    DegeneratePoints,
    InvalidConfig,
    ParseError,
};

const char* to_string(ErrorKind kind) noexcept;

// Errors caused by bad user input (exit code 2 in the CLI). Everything else
// is a numerical/runtime failure (exit code 3).
bool is_validation_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace avar
