#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cap/attitude.hpp"
#include "cap/camera.hpp"
#include "cap/estimators.hpp"

namespace cap {

/// Uncalibrated pressure-sensor depth, metres.
struct RawDepth {
  double timestamp = 0.0;
  double raw = 0.0;
};

/// Ground-truth marker position in the world frame.
struct TruthSample {
  double timestamp = 0.0;
  Vec3 position = Vec3::Zero();
};

using DatasetRecord = std::variant<ImuSample, SlamPose, TagObservation, RawDepth, TruthSample>;

double record_time(const DatasetRecord& r);
std::string_view record_kind(const DatasetRecord& r);

/// One JSON object per line, e.g.
///   {"t":0.01,"kind":"imu","gyro":[..3],"accel":[..3]}
///   {"t":0.025,"kind":"slam","x":..,"y":..,"yaw":..}
///   {"t":0.0333,"kind":"tag","corners":[[u,v],[u,v],[u,v],[u,v]]}
///   {"t":0.0667,"kind":"depth","raw":..}
///   {"t":0.01,"kind":"truth","p":[x,y,z]}
std::string to_jsonl(const DatasetRecord& r);

/// Throws ParseError (without line information) on malformed input.
DatasetRecord parse_record(std::string_view line);

/// Streaming reader enforcing non-decreasing timestamps. Errors carry the
/// 1-based line number.
class DatasetReader {
 public:
  explicit DatasetReader(std::istream& in) : in_(in) {}

  std::optional<DatasetRecord> next();
  std::size_t line_number() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::optional<double> last_t_;
};

std::string to_jsonl(const PositionEstimate& e);

/// Throws ParseError on malformed input.
PositionEstimate parse_estimate(std::string_view line);

}  // namespace cap
