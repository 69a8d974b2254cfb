#pragma once

#include <Eigen/Dense>

namespace cap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kOrthonormalTol = 1e-9;
inline constexpr double kGimbalMargin = 1e-6;

/// Z-Y-X Euler angles in radians: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerZYX {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

bool is_rotation(const Mat3& r, double tol = kOrthonormalTol);

/// Rigid-body transform H = [R t; 0 1]. Maps points expressed in the child
/// frame into the parent frame.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Throws InvalidArgument if `rotation` is not a proper rotation.
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform from_euler(const EulerZYX& e, const Vec3& t);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat4 matrix() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

Vec3 transform_point(const RigidTransform& h, const Vec3& p);

/// Right multiplication along a chain: compose(H01, H12) = H02.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

RigidTransform invert(const RigidTransform& h);

/// Closed-form Z-Y-X rotation. Throws GimbalLockNear when
/// |pitch| >= pi/2 - 1e-6.
Mat3 euler_zyx_to_rotation(const EulerZYX& e);

/// Line through `point` along `direction`; x(k) = point + k * direction.
struct PluckerLine {
  Vec3 point;
  Vec3 direction;
};

/// Line with point = b and direction = a - b. Throws DegenerateLine when the
/// points coincide within 1e-9.
PluckerLine line_from_points(const Vec3& a, const Vec3& b);

/// Line parameter k at which the line crosses z = z_plane.
double zplane_parameter(const PluckerLine& line, double z_plane);

/// Intersection with the horizontal plane z = z_plane. The returned z is
/// exactly z_plane. Throws ParallelToPlane when |direction.z| <= 1e-9.
Vec3 intersect_with_zplane(const PluckerLine& line, double z_plane);

}  // namespace cap
