#pragma once

#include <array>
#include <vector>

#include "cap/geometry.hpp"

namespace cap {

/// Pinhole intrinsics. Inputs are assumed rectified; `distortion` is carried
/// for round-tripping configuration files and is not applied anywhere.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  std::vector<double> distortion;

  /// The calibrated underwater camera used in the tank experiments (800x600).
  static Intrinsics reference();

  /// Throws InvalidArgument if fx, fy <= 0 or the principal point lies outside
  /// the image.
  void validate() const;

  Mat3 matrix() const;
  bool contains(double u, double v) const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Four detected marker corners, ordered to match TagGeometry::corners().
struct TagObservation {
  double timestamp = 0.0;
  std::array<PixelPoint, 4> corners{};
  bool detected = true;
};

/// Square planar tag centred on the marker-frame origin, face normal +z.
/// Corner order: (-s/2,-s/2), (s/2,-s/2), (s/2,s/2), (-s/2,s/2).
struct TagGeometry {
  double side_length = 0.15;

  std::array<Vec3, 4> corners() const;
};

struct TagPose {
  RigidTransform camera_from_marker;
  double reprojection_rms = 0.0;
};

/// K^-1 [u v 1]^T; the returned z is exactly 1.
Vec3 back_project(const Intrinsics& k, const PixelPoint& px);

/// Throws BehindCamera if p_cam.z <= 1e-6.
PixelPoint project_point(const Intrinsics& k, const Vec3& p_cam);

/// Image of the tag centre: where the corner diagonals cross.
PixelPoint tag_center_pixel(const TagObservation& obs);

/// Shoelace area of the corner quadrilateral, px^2.
double quad_area(const TagObservation& obs);

double reprojection_rms(const Intrinsics& k, const TagGeometry& geom,
                        const RigidTransform& camera_from_marker, const TagObservation& obs);

struct PnpOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;
};

/// Planar pose from the four tag corners: homography initialisation, then
/// damped Gauss-Newton on reprojection error. Of the two planar candidates
/// (the direct decomposition and its normal reflected about the line of
/// sight) the camera-facing one with lower RMS wins.
///
/// Throws PnPDegenerate for collinear or tiny quads and PnPNoConvergence when
/// the iteration cap is hit.
TagPose solve_pnp_planar(const Intrinsics& k, const TagGeometry& geom, const TagObservation& obs,
                         const PnpOptions& options = {});

}  // namespace cap
