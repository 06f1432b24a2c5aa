#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace schmidt {

enum class ErrorCode {
  NotHyperbolic,
  NotUnimodular,
  NotUniformlyExpanding,
  Unsupported,
  DegenerateDomain,
  OnBoundary,
  OutsideDomain,
  NoChild,
  InvalidParams,
  Precondition,
  IllegalMove,
  TilingDepthExceeded,
  NotConverged,
  MultipleComponents,
  DichotomyFailure,
  ZeroDensity,
  DegenerateFit,
  WindowTooSmall,
  ConfigError,
  ReplayMismatch
};

inline std::string_view code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotHyperbolic: return "NotHyperbolic";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::NotUniformlyExpanding: return "NotUniformlyExpanding";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::OnBoundary: return "OnBoundary";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::NoChild: return "NoChild";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::IllegalMove: return "IllegalMove";
    case ErrorCode::TilingDepthExceeded: return "TilingDepthExceeded";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::MultipleComponents: return "MultipleComponents";
    case ErrorCode::DichotomyFailure: return "DichotomyFailure";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ReplayMismatch: return "ReplayMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace schmidt
