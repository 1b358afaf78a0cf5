#pragma once

#include <stdexcept>
#include <string>

namespace attn {

enum class ErrorKind {
    InvalidProblem,
    NonPD,
    WrongDimension,
    DomainError,
    UnsupportedPrior,
    AssumptionViolated,
    NoConvergence,
    InfeasibleFloor,
    GridTooCoarse,
    InvalidParam,
    InvalidConfig,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidProblem: return "InvalidProblem";
    case ErrorKind::NonPD: return "NonPD";
    case ErrorKind::WrongDimension: return "WrongDimension";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::UnsupportedPrior: return "UnsupportedPrior";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InfeasibleFloor: return "InfeasibleFloor";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace attn
