#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emmkit {

enum class ErrorCode {
    InvalidTimeFunction,
    InvalidParameter,
    ShapeMismatch,
    JumpBelowFloor,
    NonpositiveIntensity,
    DensityNotNormalized,
    QuadratureFailure,
    DomainError,
    InvalidIntensities,
    NotComplete,
    NonpositiveGamma,
    EmptyRetention,
    EmptyCell,
    PlanError,
    PlanMismatch,
    UnboundedIntensity,
    NullMark,
    FactorAtMinusOne,
    NonReducedEvent,
    BudgetExceeded,
    ParseError,
};

inline std::string_view to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::InvalidTimeFunction: return "InvalidTimeFunction";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::JumpBelowFloor: return "JumpBelowFloor";
    case ErrorCode::NonpositiveIntensity: return "NonpositiveIntensity";
    case ErrorCode::DensityNotNormalized: return "DensityNotNormalized";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidIntensities: return "InvalidIntensities";
    case ErrorCode::NotComplete: return "NotComplete";
    case ErrorCode::NonpositiveGamma: return "NonpositiveGamma";
    case ErrorCode::EmptyRetention: return "EmptyRetention";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::PlanError: return "PlanError";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::UnboundedIntensity: return "UnboundedIntensity";
    case ErrorCode::NullMark: return "NullMark";
    case ErrorCode::FactorAtMinusOne: return "FactorAtMinusOne";
    case ErrorCode::NonReducedEvent: return "NonReducedEvent";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace emmkit
