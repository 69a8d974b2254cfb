#include "cap/geometry.hpp"

#include <cmath>
#include <numbers>

#include "cap/error.hpp"

namespace cap {

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_)) {
    throw Error(ErrorCode::InvalidArgument, "rotation block is not orthonormal with det +1");
  }
  if (!translation_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "translation is not finite");
  }
}

RigidTransform RigidTransform::from_euler(const EulerZYX& e, const Vec3& t) {
  return {euler_zyx_to_rotation(e), t};
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Vec3 transform_point(const RigidTransform& h, const Vec3& p) {
  return h.rotation() * p + h.translation();
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

RigidTransform invert(const RigidTransform& h) {
  const Mat3 rt = h.rotation().transpose();
  return {rt, -(rt * h.translation())};
}

Mat3 euler_zyx_to_rotation(const EulerZYX& e) {
  if (!std::isfinite(e.yaw) || !std::isfinite(e.pitch) || !std::isfinite(e.roll)) {
    throw Error(ErrorCode::InvalidArgument, "Euler angles must be finite");
  }
  if (std::abs(e.pitch) >= std::numbers::pi / 2.0 - kGimbalMargin) {
    throw Error(ErrorCode::GimbalLockNear, "pitch too close to +/-pi/2");
  }
  const double cps = std::cos(e.yaw), sps = std::sin(e.yaw);
  const double cth = std::cos(e.pitch), sth = std::sin(e.pitch);
  const double cph = std::cos(e.roll), sph = std::sin(e.roll);

  Mat3 r;
  r << cps * cth, cps * sth * sph - sps * cph, cps * sth * cph + sps * sph,
       sps * cth, sps * sth * sph + cps * cph, sps * sth * cph - cps * sph,
       -sth,      cth * sph,                   cth * cph;
  return r;
}

PluckerLine line_from_points(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  if (d.norm() <= 1e-9) {
    throw Error(ErrorCode::DegenerateLine, "line endpoints coincide");
  }
  return {b, d};
}

double zplane_parameter(const PluckerLine& line, double z_plane) {
  if (std::abs(line.direction.z()) <= 1e-9) {
    throw Error(ErrorCode::ParallelToPlane, "line is parallel to the horizontal plane");
  }
  return (z_plane - line.point.z()) / line.direction.z();
}

Vec3 intersect_with_zplane(const PluckerLine& line, double z_plane) {
  const double k = zplane_parameter(line, z_plane);
  return {line.point.x() + line.direction.x() * k, line.point.y() + line.direction.y() * k,
          z_plane};
}

}  // namespace cap
