#pragma once

#include <optional>

#include "cap/geometry.hpp"

namespace cap {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kGravity = 9.81;

struct ImuSample {
  double timestamp = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s, body frame
  Vec3 accel = Vec3::Zero();  // m/s^2; level and at rest reads (0, 0, -g)
};

struct TiltState {
  double roll = 0.0;
  double pitch = 0.0;
  Mat2 covariance = Mat2::Zero();
};

struct TiltConfig {
  Mat2 process_noise = Mat2::Identity() * 1e-6;
  Mat2 measurement_noise = Mat2::Identity() * 4e-4;
  Mat2 initial_covariance = Mat2::Identity() * 1e-2;
  /// Rotation taking IMU-frame vectors into the body frame.
  Mat3 imu_to_body = Mat3::Identity();

  /// Throws InvalidArgument unless Q and R are symmetric positive definite.
  void validate() const;
};

struct TiltMeasurement {
  double roll = 0.0;
  double pitch = 0.0;
};

/// Noise-free Euler-rate integration of body rates over dt.
Vec2 predict_mean(double roll, double pitch, const Vec3& gyro, double dt);

/// d f / d [roll, pitch] of predict_mean.
Mat2 prediction_jacobian(double roll, double pitch, const Vec3& gyro, double dt);

/// Throws PitchSingularity unless dt in (0, 0.5] and |pitch| < pi/2 - 1e-3.
TiltState ekf_predict(const TiltState& state, const Vec3& gyro, double dt, const TiltConfig& cfg);

/// Tilt implied by a gravity-dominated accelerometer reading:
///   roll  = atan2(-a_y, -a_z)
///   pitch = atan(a_x / sqrt(a_y^2 + a_z^2))
/// Throws AccelOutOfRange unless |a| in [0.5 g, 1.5 g].
TiltMeasurement accel_to_tilt(const Vec3& accel);

/// EKF correction with a direct (H = I) tilt observation.
TiltState ekf_update(const TiltState& state, const Vec3& accel, const TiltConfig& cfg);

/// Full body attitude: yaw from SLAM, roll and pitch from the filter.
Mat3 fuse_full_rotation(const TiltState& tilt, double yaw);

/// Streams IMU samples through predict/update. The first sample (or the first
/// after a gap longer than 0.5 s) initialises the state from the accelerometer.
class TiltFilter {
 public:
  explicit TiltFilter(TiltConfig cfg = {});

  /// Returns the posterior after consuming `sample`, or nullopt while the
  /// filter has not been initialised yet.
  std::optional<TiltState> process(const ImuSample& sample);

  const std::optional<TiltState>& state() const { return state_; }
  const TiltConfig& config() const { return cfg_; }

 private:
  TiltConfig cfg_;
  std::optional<TiltState> state_;
  double last_time_ = 0.0;
  Vec3 last_gyro_ = Vec3::Zero();
};

}  // namespace cap
