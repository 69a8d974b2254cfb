#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cap {

enum class ErrorCode {
  InvalidArgument,
  GimbalLockNear,
  DegenerateLine,
  ParallelToPlane,
  BehindCamera,
  PnPDegenerate,
  PnPNoConvergence,
  PitchSingularity,
  AccelOutOfRange,
  StaleSensor,
  NoSampleYet,
  InsufficientData,
  DegenerateData,
  RegionTooSmall,
  TagNotVisible,
  EmptySeries,
  SingularDesign,
  NoOverlap,
  ParseError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers can branch
// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cap
