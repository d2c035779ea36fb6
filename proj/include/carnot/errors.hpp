#pragma once

#include <stdexcept>
#include <string>

namespace carnot {

enum class Code {
  SkewViolation,
  JacobiViolation,
  GradingViolation,
  NotGenerating,
  DimensionMismatch,
  UnsupportedStep,
  NonPositiveScale,
  NonFiniteState,
  TooFewSamples,
  NotSkew,
  WrongStep,
  ZeroCovector,
  GridMismatch,
  EndpointViolation,
  NotUnitSpeed,
  NotUnit,
  NoConvergence,
  ZeroGradient,
  Characteristic,
  NotOnSurface,
  OutsideChart,
  InvalidArgument,
  ParseError,
};

// Coarse grouping used by the command line for exit codes.
enum class Category { Config, Math, Convergence };

inline const char* code_name(Code c) {
  switch (c) {
    case Code::SkewViolation: return "SkewViolation";
    case Code::JacobiViolation: return "JacobiViolation";
    case Code::GradingViolation: return "GradingViolation";
    case Code::NotGenerating: return "NotGenerating";
    case Code::DimensionMismatch: return "DimensionMismatch";
    case Code::UnsupportedStep: return "UnsupportedStep";
    case Code::NonPositiveScale: return "NonPositiveScale";
    case Code::NonFiniteState: return "NonFiniteState";
    case Code::TooFewSamples: return "TooFewSamples";
    case Code::NotSkew: return "NotSkew";
    case Code::WrongStep: return "WrongStep";
    case Code::ZeroCovector: return "ZeroCovector";
    case Code::GridMismatch: return "GridMismatch";
    case Code::EndpointViolation: return "EndpointViolation";
    case Code::NotUnitSpeed: return "NotUnitSpeed";
    case Code::NotUnit: return "NotUnit";
    case Code::NoConvergence: return "NoConvergence";
    case Code::ZeroGradient: return "ZeroGradient";
    case Code::Characteristic: return "Characteristic";
    case Code::NotOnSurface: return "NotOnSurface";
    case Code::OutsideChart: return "OutsideChart";
    case Code::InvalidArgument: return "InvalidArgument";
    case Code::ParseError: return "ParseError";
  }
  return "Unknown";
}

inline Category category(Code c) {
  switch (c) {
    case Code::SkewViolation:
    case Code::JacobiViolation:
    case Code::GradingViolation:
    case Code::NotGenerating:
    case Code::DimensionMismatch:
    case Code::UnsupportedStep:
    case Code::WrongStep:
    case Code::InvalidArgument:
    case Code::ParseError:
    case Code::GridMismatch:
      return Category::Config;
    case Code::NoConvergence:
    case Code::NonFiniteState:
      return Category::Convergence;
    default:
      return Category::Math;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Code code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace carnot
