#pragma once

#include <stdexcept>
#include <string>

namespace taperod {

enum class ErrorCode {
  NotSkewSymmetric,
  OutOfDomain,
  InvalidSpec,
  OffsetInsideBackbone,
  SingularStiffness,
  ZeroTangent,
  SingularSystem,
  NoConvergence,
  NotConverged,
  NonUnimodal,
  DegenerateGeometry,
  EmptyDataset,
  IoFailure,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSkewSymmetric: return "NotSkewSymmetric";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::OffsetInsideBackbone: return "OffsetInsideBackbone";
    case ErrorCode::SingularStiffness: return "SingularStiffness";
    case ErrorCode::ZeroTangent: return "ZeroTangent";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NonUnimodal: return "NonUnimodal";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map them onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

/// Integration failures remember where along the backbone they happened.
class IntegrationError : public Error {
 public:
  IntegrationError(ErrorCode code, const std::string& what, double s)
      : Error(code, what + " at s=" + std::to_string(s)), s_(s) {}

  double arc_length() const noexcept { return s_; }

 private:
  double s_;
};

/// Shooting failure; keeps the smallest residual norm seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error(ErrorCode::NoConvergence, what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace taperod
