#pragma once

#include <deque>
#include <optional>
#include <string_view>

#include "cap/attitude.hpp"
#include "cap/camera.hpp"
#include "cap/geometry.hpp"

namespace cap {

/// Static rig geometry of the surface vehicle.
struct RigExtrinsics {
  RigidTransform body_from_camera;
  double body_height = 0.05;  // z of the body origin above the water datum, m

  /// Downward-looking camera slightly ahead of the body origin.
  static RigExtrinsics reference();
};

/// Planar SLAM output.
struct SlamPose {
  double timestamp = 0.0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// Filtered roll/pitch at a point in time.
struct TiltSample {
  double timestamp = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
};

struct SurfacePoseState {
  double timestamp = 0.0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
};

/// Calibrated depth of the marker, positive down.
struct DepthMeasurement {
  double timestamp = 0.0;
  double depth = 0.0;
};

struct Staleness {
  double slam = 0.0;
  double tilt = 0.0;
  double tag = 0.0;
  double depth = 0.0;
};

struct SensorFrameBundle {
  double timestamp = 0.0;
  SurfacePoseState pose;
  std::optional<TagObservation> tag;
  std::optional<DepthMeasurement> depth;
  Staleness staleness;
};

enum class Method { CPnP, CD };

std::string_view to_string(Method m);

struct PositionEstimate {
  double timestamp = 0.0;
  Vec3 position = Vec3::Zero();
  Method method = Method::CD;
  double reprojection_rms = 0.0;  // CPnP only
  double ray_parameter = 0.0;     // CD only: k at the depth plane
  double max_staleness = 0.0;
};

struct EstimatorOptions {
  double staleness_bound = 0.2;
  /// Optional marker-to-vehicle-centre offset in the marker frame. CPnP
  /// rotates it by the recovered marker attitude; CD assumes a level marker
  /// aligned with the world axes.
  std::optional<Vec3> marker_offset;
};

/// H^W_B from the SLAM pose, the filtered tilt and the static body height.
RigidTransform build_world_from_body(const SurfacePoseState& pose, const RigExtrinsics& rig);

/// Transform-chain estimate p^W_M = H^W_B H^B_C p^C_M with p^C_M from PnP.
PositionEstimate estimate_cpnp(const SensorFrameBundle& bundle, const RigExtrinsics& rig,
                               const Intrinsics& k, const TagGeometry& geom,
                               const EstimatorOptions& options = {});

/// Ray/depth-plane estimate: the line from the camera centre through the
/// back-projected tag centre, cut by the plane z = -depth.
PositionEstimate estimate_cd(const SensorFrameBundle& bundle, const RigExtrinsics& rig,
                             const Intrinsics& k, const EstimatorOptions& options = {});

/// Latest-sample synchronisation across the sensor streams. Samples must be
/// pushed in non-decreasing time order per stream; only samples that can still
/// be the latest-at-or-before some future query are retained.
class Synchronizer {
 public:
  void push(const SlamPose& s) { push_into(slam_, s); }
  void push(const TiltSample& s) { push_into(tilt_, s); }
  void push(const TagObservation& s) { push_into(tag_, s); }
  void push(const DepthMeasurement& s) { push_into(depth_, s); }

  /// Latest sample of each source with timestamp <= t. Throws NoSampleYet when
  /// either pose source (SLAM, tilt) has nothing at or before t. Tag and depth
  /// are left empty when missing.
  SensorFrameBundle bundle_at(double t) const;

  /// Drops samples that can no longer be selected by queries at times >= t.
  void discard_before(double t);

 private:
  static void check_order(double last, double next);

  template <typename T>
  static void push_into(std::deque<T>& q, const T& s) {
    if (!q.empty()) check_order(q.back().timestamp, s.timestamp);
    q.push_back(s);
  }

  std::deque<SlamPose> slam_;
  std::deque<TiltSample> tilt_;
  std::deque<TagObservation> tag_;
  std::deque<DepthMeasurement> depth_;
};

}  // namespace cap
