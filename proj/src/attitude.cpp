#include "cap/attitude.hpp"

#include <cmath>
#include <numbers>

#include "cap/error.hpp"

namespace cap {

namespace {

bool symmetric_positive_definite(const Mat2& m) {
  if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-12) return false;
  return m(0, 0) > 0.0 && m.determinant() > 0.0;
}

Mat2 symmetrize(const Mat2& m) { return (m + m.transpose()) / 2.0; }

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a == -std::numbers::pi ? std::numbers::pi : a;
}

}  // namespace

void TiltConfig::validate() const {
  if (!symmetric_positive_definite(process_noise)) {
    throw Error(ErrorCode::InvalidArgument, "process noise must be symmetric positive definite");
  }
  if (!symmetric_positive_definite(measurement_noise)) {
    throw Error(ErrorCode::InvalidArgument,
                "measurement noise must be symmetric positive definite");
  }
  if (!is_rotation(imu_to_body)) {
    throw Error(ErrorCode::InvalidArgument, "IMU mounting is not a rotation");
  }
}

Vec2 predict_mean(double roll, double pitch, const Vec3& w, double dt) {
  const double sr = std::sin(roll), cr = std::cos(roll), tp = std::tan(pitch);
  return {roll + dt * (w.x() + w.y() * sr * tp + w.z() * cr * tp),
          pitch + dt * (w.y() * cr - w.z() * sr)};
}

Mat2 prediction_jacobian(double roll, double pitch, const Vec3& w, double dt) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  Mat2 a;
  a << 1.0 + dt * (w.y() * cr * tp - w.z() * sr * tp), dt * (w.y() * sr + w.z() * cr) / (cp * cp),
       -dt * (w.y() * sr + w.z() * cr), 1.0;
  return a;
}

TiltState ekf_predict(const TiltState& state, const Vec3& gyro, double dt, const TiltConfig& cfg) {
  if (!(dt > 0.0 && dt <= 0.5)) {
    throw Error(ErrorCode::PitchSingularity, "prediction step dt must lie in (0, 0.5] s");
  }
  if (!(std::abs(state.pitch) < std::numbers::pi / 2.0 - 1e-3)) {
    throw Error(ErrorCode::PitchSingularity, "pitch too close to +/-pi/2 for tan(pitch)");
  }
  const Vec2 mean = predict_mean(state.roll, state.pitch, gyro, dt);
  const Mat2 a = prediction_jacobian(state.roll, state.pitch, gyro, dt);
  TiltState out;
  out.roll = mean(0);
  out.pitch = mean(1);
  out.covariance = symmetrize(a * state.covariance * a.transpose() + cfg.process_noise);
  return out;
}

TiltMeasurement accel_to_tilt(const Vec3& a) {
  const double norm = a.norm();
  if (!std::isfinite(norm) || norm < 0.5 * kGravity || norm > 1.5 * kGravity) {
    throw Error(ErrorCode::AccelOutOfRange, "accelerometer magnitude outside [0.5 g, 1.5 g]");
  }
  TiltMeasurement m;
  m.roll = std::atan2(-a.y(), -a.z());
  m.pitch = std::atan(a.x() / std::hypot(a.y(), a.z()));
  return m;
}

TiltState ekf_update(const TiltState& state, const Vec3& accel, const TiltConfig& cfg) {
  const TiltMeasurement z = accel_to_tilt(accel);
  const Vec2 innovation(wrap_angle(z.roll - state.roll), z.pitch - state.pitch);
  const Mat2& p = state.covariance;
  const Mat2 s = p + cfg.measurement_noise;
  const Mat2 gain = p * s.inverse();
  TiltState out;
  const Vec2 corrected = Vec2(state.roll, state.pitch) + gain * innovation;
  out.roll = wrap_angle(corrected(0));
  out.pitch = corrected(1);
  // Joseph form keeps P symmetric PSD under roundoff.
  const Mat2 i_k = Mat2::Identity() - gain;
  out.covariance =
      symmetrize(i_k * p * i_k.transpose() + gain * cfg.measurement_noise * gain.transpose());
  return out;
}

Mat3 fuse_full_rotation(const TiltState& tilt, double yaw) {
  return euler_zyx_to_rotation({yaw, tilt.pitch, tilt.roll});
}

TiltFilter::TiltFilter(TiltConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::optional<TiltState> TiltFilter::process(const ImuSample& sample) {
  const Vec3 gyro = cfg_.imu_to_body * sample.gyro;
  const Vec3 accel = cfg_.imu_to_body * sample.accel;
  const double dt = sample.timestamp - last_time_;

  if (!state_ || dt > 0.5) {
    try {
      const TiltMeasurement m = accel_to_tilt(accel);
      state_ = TiltState{m.roll, m.pitch, cfg_.initial_covariance};
    } catch (const Error&) {
      state_.reset();
    }
  } else if (dt > 0.0) {
    TiltState next = ekf_predict(*state_, last_gyro_, dt, cfg_);
    try {
      next = ekf_update(next, accel, cfg_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AccelOutOfRange) throw;
    }
    state_ = next;
  }
  last_time_ = sample.timestamp;
  last_gyro_ = gyro;
  return state_;
}

}  // namespace cap
