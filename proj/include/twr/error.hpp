#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twr {

enum class ErrorKind {
  DimensionMismatch,
  DegenerateChannels,
  SingularTangentSystem,
  SingularSystem,
  CorrectionDiverged,
  BranchFailed,
  NoFeasibleBranch,
  NotOnConstraintSurface,
  NoIntersectionFound,
  OracleNoFeasiblePoint,
  InvalidInput,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DegenerateChannels: return "DegenerateChannels";
    case ErrorKind::SingularTangentSystem: return "SingularTangentSystem";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::CorrectionDiverged: return "CorrectionDiverged";
    case ErrorKind::BranchFailed: return "BranchFailed";
    case ErrorKind::NoFeasibleBranch: return "NoFeasibleBranch";
    case ErrorKind::NotOnConstraintSurface: return "NotOnConstraintSurface";
    case ErrorKind::NoIntersectionFound: return "NoIntersectionFound";
    case ErrorKind::OracleNoFeasiblePoint: return "OracleNoFeasiblePoint";
    case ErrorKind::InvalidInput: return "InvalidInput";
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

}  // namespace twr
