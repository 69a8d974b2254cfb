#include "cap/error.hpp"

namespace cap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GimbalLockNear: return "GimbalLockNear";
    case ErrorCode::DegenerateLine: return "DegenerateLine";
    case ErrorCode::ParallelToPlane: return "ParallelToPlane";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::PnPDegenerate: return "PnPDegenerate";
    case ErrorCode::PnPNoConvergence: return "PnPNoConvergence";
    case ErrorCode::PitchSingularity: return "PitchSingularity";
    case ErrorCode::AccelOutOfRange: return "AccelOutOfRange";
    case ErrorCode::StaleSensor: return "StaleSensor";
    case ErrorCode::NoSampleYet: return "NoSampleYet";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::RegionTooSmall: return "RegionTooSmall";
    case ErrorCode::TagNotVisible: return "TagNotVisible";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace cap
