#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hencky {

enum class ErrorCode {
  NonPositiveDeterminant,
  NotPositiveDefinite,
  OutsideDomain,
  DomainError,
  TooCloseToGamma2,
  InvalidParams,
  InvalidDimensions,
  InvalidGrid,
  InfeasibleState,
  NoFeasibleStart,
  StencilLeftDomain,
  ConstraintConstructionFailed,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDeterminant: return "NonPositiveDeterminant";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::TooCloseToGamma2: return "TooCloseToGamma2";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::InfeasibleState: return "InfeasibleState";
    case ErrorCode::NoFeasibleStart: return "NoFeasibleStart";
    case ErrorCode::StencilLeftDomain: return "StencilLeftDomain";
    case ErrorCode::ConstraintConstructionFailed: return "ConstraintConstructionFailed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hencky
