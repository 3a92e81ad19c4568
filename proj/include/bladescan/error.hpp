#pragma once

#include <stdexcept>
#include <string>

namespace bladescan {

enum class ErrorCode {
  DegenerateCloud,
  NoModel,
  PointOnLine,
  ZeroVector,
  OutOfBounds,
  InvalidStep,
  DegenerateTriangle,
  CoincidentPoints,
  DegenerateProjection,
  NoPlane,
  ClusterNeverThree,
  NoConvergence,
  BehindCamera,
  EmptyRegion,
  InvalidSpec,
  InvalidConfig,
  Io,
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::NoModel: return "NoModel";
    case ErrorCode::PointOnLine: return "PointOnLine";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::NoPlane: return "NoPlane";
    case ErrorCode::ClusterNeverThree: return "ClusterNeverThree";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is prefixed with the code name so stderr diagnostics are greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code), detail_(detail) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace bladescan
