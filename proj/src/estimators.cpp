#include "cap/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cap/error.hpp"

namespace cap {

RigExtrinsics RigExtrinsics::reference() {
  constexpr double kDeg = std::numbers::pi / 180.0;
  return {RigidTransform::from_euler({0.0, 2.0 * kDeg, std::numbers::pi}, Vec3(0.10, 0.0, -0.05)),
          0.05};
}

std::string_view to_string(Method m) { return m == Method::CPnP ? "cpnp" : "cd"; }

RigidTransform build_world_from_body(const SurfacePoseState& pose, const RigExtrinsics& rig) {
  const TiltState tilt{pose.roll, pose.pitch, Mat2::Zero()};
  return {fuse_full_rotation(tilt, pose.yaw), Vec3(pose.x, pose.y, rig.body_height)};
}

namespace {

double check_fresh(const SensorFrameBundle& b, bool need_depth, double bound) {
  if (!b.tag) throw Error(ErrorCode::StaleSensor, "no tag observation in bundle");
  if (need_depth && !b.depth) throw Error(ErrorCode::StaleSensor, "no depth measurement in bundle");
  double worst = std::max({b.staleness.slam, b.staleness.tilt, b.staleness.tag});
  if (need_depth) worst = std::max(worst, b.staleness.depth);
  if (worst > bound) {
    throw Error(ErrorCode::StaleSensor, "sample staleness exceeds the configured bound");
  }
  return worst;
}

}  // namespace

PositionEstimate estimate_cpnp(const SensorFrameBundle& bundle, const RigExtrinsics& rig,
                               const Intrinsics& k, const TagGeometry& geom,
                               const EstimatorOptions& options) {
  const double worst = check_fresh(bundle, false, options.staleness_bound);
  const TagPose tag = solve_pnp_planar(k, geom, *bundle.tag);
  const RigidTransform world_from_camera =
      compose(build_world_from_body(bundle.pose, rig), rig.body_from_camera);

  Vec3 marker_point = Vec3::Zero();
  if (options.marker_offset) marker_point = *options.marker_offset;
  const Vec3 p_cam = transform_point(tag.camera_from_marker, marker_point);

  PositionEstimate est;
  est.timestamp = bundle.timestamp;
  est.position = transform_point(world_from_camera, p_cam);
  est.method = Method::CPnP;
  est.reprojection_rms = tag.reprojection_rms;
  est.max_staleness = worst;
  return est;
}

PositionEstimate estimate_cd(const SensorFrameBundle& bundle, const RigExtrinsics& rig,
                             const Intrinsics& k, const EstimatorOptions& options) {
  const double worst = check_fresh(bundle, true, options.staleness_bound);
  const RigidTransform world_from_body = build_world_from_body(bundle.pose, rig);
  const RigidTransform world_from_camera = compose(world_from_body, rig.body_from_camera);

  const Vec3 camera_origin = transform_point(world_from_body, rig.body_from_camera.translation());
  const Vec3 ray_point = transform_point(world_from_camera, back_project(k, tag_center_pixel(*bundle.tag)));
  const PluckerLine line = line_from_points(camera_origin, ray_point);
  const double plane_z = -bundle.depth->depth;
  const double ray_k = zplane_parameter(line, plane_z);

  PositionEstimate est;
  est.timestamp = bundle.timestamp;
  est.position = intersect_with_zplane(line, plane_z);
  if (options.marker_offset) est.position += *options.marker_offset;
  est.method = Method::CD;
  est.ray_parameter = ray_k;
  est.max_staleness = worst;
  return est;
}

void Synchronizer::check_order(double last, double next) {
  if (next < last) throw Error(ErrorCode::InvalidArgument, "sensor stream is not time-ordered");
}

namespace {

template <typename T>
const T* latest_at(const std::deque<T>& q, double t) {
  auto it = std::upper_bound(q.begin(), q.end(), t,
                             [](double value, const T& s) { return value < s.timestamp; });
  if (it == q.begin()) return nullptr;
  return &*std::prev(it);
}

template <typename T>
void trim(std::deque<T>& q, double t) {
  // Keep the newest sample at or before t; everything older is unreachable.
  while (q.size() >= 2 && q[1].timestamp <= t) q.pop_front();
}

}  // namespace

SensorFrameBundle Synchronizer::bundle_at(double t) const {
  const SlamPose* slam = latest_at(slam_, t);
  if (slam == nullptr) throw Error(ErrorCode::NoSampleYet, "no SLAM pose at or before query time");
  const TiltSample* tilt = latest_at(tilt_, t);
  if (tilt == nullptr) throw Error(ErrorCode::NoSampleYet, "no tilt estimate at or before query time");

  SensorFrameBundle b;
  b.timestamp = t;
  b.pose = {std::min(slam->timestamp, tilt->timestamp), slam->x, slam->y, slam->yaw, tilt->roll,
            tilt->pitch};
  b.staleness.slam = t - slam->timestamp;
  b.staleness.tilt = t - tilt->timestamp;
  b.staleness.tag = std::numeric_limits<double>::infinity();
  b.staleness.depth = std::numeric_limits<double>::infinity();
  if (const auto* tag = latest_at(tag_, t)) {
    b.tag = *tag;
    b.staleness.tag = t - tag->timestamp;
  }
  if (const auto* depth = latest_at(depth_, t)) {
    b.depth = *depth;
    b.staleness.depth = t - depth->timestamp;
  }
  return b;
}

void Synchronizer::discard_before(double t) {
  trim(slam_, t);
  trim(tilt_, t);
  trim(tag_, t);
  trim(depth_, t);
}

}  // namespace cap
