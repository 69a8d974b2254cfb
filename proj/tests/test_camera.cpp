#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cap/camera.hpp"
#include "cap/error.hpp"
#include "oracles.hpp"

using namespace cap;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Intrinsics unit_k() {
  Intrinsics k;
  k.fx = k.fy = 1.0;
  k.cx = k.cy = 0.0;
  k.width = 10;
  k.height = 10;
  return k;
}

TagObservation observe(const Intrinsics& k, const TagGeometry& g, const RigidTransform& pose) {
  TagObservation obs;
  const auto corners = g.corners();
  for (std::size_t i = 0; i < 4; ++i) obs.corners[i] = project_point(k, transform_point(pose, corners[i]));
  return obs;
}

bool in_image(const Intrinsics& k, const TagObservation& obs) {
  for (const auto& c : obs.corners) {
    if (!k.contains(c.u, c.v)) return false;
  }
  return true;
}

/// Seeded camera-from-marker pose with the tag facing the camera.
RigidTransform random_pose(std::mt19937_64& rng, double max_tilt) {
  std::uniform_real_distribution<double> tilt(-max_tilt, max_tilt), yaw(-3.1, 3.1), z(0.5, 2.0),
      lateral(-0.4, 0.4);
  const double depth = z(rng);
  // Rx(pi) makes the tag normal point back toward the camera.
  const Mat3 r = euler_zyx_to_rotation({yaw(rng), tilt(rng), tilt(rng)}) *
                 euler_zyx_to_rotation({0, 0, std::numbers::pi});
  return {r, Vec3(lateral(rng) * depth, lateral(rng) * depth * 0.6, depth)};
}

}  // namespace

TEST(BackProject, PrincipalPoint) {
  const auto k = Intrinsics::reference();
  const Vec3 r = back_project(k, {346.861136, 220.015799});
  EXPECT_NEAR(r.x(), 0.0, 1e-12);
  EXPECT_NEAR(r.y(), 0.0, 1e-12);
  EXPECT_EQ(r.z(), 1.0);
}

TEST(BackProject, OneFocalLengthRight) {
  const Vec3 r = back_project(Intrinsics::reference(), {861.038901, 220.015799});
  EXPECT_NEAR(r.x(), 1.0, 1e-9);
  EXPECT_NEAR(r.y(), 0.0, 1e-9);
  EXPECT_EQ(r.z(), 1.0);
}

TEST(BackProject, UnitIntrinsics) {
  EXPECT_EQ(back_project(unit_k(), {3, 4}), Vec3(3, 4, 1));
}

TEST(ProjectPoint, Examples) {
  const auto a = project_point(unit_k(), {0, 0, 2});
  EXPECT_EQ(a.u, 0.0);
  EXPECT_EQ(a.v, 0.0);
  const auto b = project_point(Intrinsics::reference(), {0, 0, 1.5});
  EXPECT_NEAR(b.u, 346.861136, 1e-12);
  EXPECT_NEAR(b.v, 220.015799, 1e-12);
  try {
    project_point(unit_k(), {0, 0, -1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
  }
}

TEST(ProjectPoint, MatchesPinholeOracle) {
  const auto k = Intrinsics::reference();
  const Vec3 p(0.2, -0.1, 1.3);
  const auto px = project_point(k, p);
  const auto o = oracle::pinhole(k.fx, k.fy, k.cx, k.cy, p);
  EXPECT_NEAR(px.u, o.x(), 1e-12);
  EXPECT_NEAR(px.v, o.y(), 1e-12);
}

TEST(ProjectPoint, RoundTrip1000) {
  const auto k = Intrinsics::reference();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> z(0.2, 3.0), xy(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double depth = z(rng);
    const Vec3 p(xy(rng) * depth, xy(rng) * depth, depth);
    const Vec3 back = back_project(k, project_point(k, p)) * depth;
    EXPECT_LE((back - p).norm(), 1e-9);
  }
}

TEST(Intrinsics, Validate) {
  EXPECT_NO_THROW(Intrinsics::reference().validate());
  auto k = Intrinsics::reference();
  k.fx = 0.0;
  EXPECT_THROW(k.validate(), Error);
  k = Intrinsics::reference();
  k.cx = 900.0;
  EXPECT_THROW(k.validate(), Error);
}

TEST(TagCenter, Squares) {
  TagObservation a;
  a.corners = {{{0, 0}, {2, 0}, {2, 2}, {0, 2}}};
  EXPECT_NEAR(tag_center_pixel(a).u, 1.0, 1e-15);
  EXPECT_NEAR(tag_center_pixel(a).v, 1.0, 1e-15);
  TagObservation b;
  b.corners = {{{10, 10}, {20, 10}, {20, 20}, {10, 20}}};
  EXPECT_NEAR(tag_center_pixel(b).u, 15.0, 1e-12);
  EXPECT_NEAR(tag_center_pixel(b).v, 15.0, 1e-12);
}

TEST(TagCenter, ProjectionOfCentre) {
  const auto k = Intrinsics::reference();
  const TagGeometry g;
  const RigidTransform fronto(Mat3::Identity(), Vec3(0.1, -0.05, 1.2));
  const auto c = tag_center_pixel(observe(k, g, fronto));
  const auto truth = project_point(k, fronto.translation());
  EXPECT_NEAR(c.u, truth.u, 1e-9);
  EXPECT_NEAR(c.v, truth.v, 1e-9);

  // Under perspective the diagonals still meet at the image of the centre.
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto pose = random_pose(rng, 25 * kDeg);
    const auto cc = tag_center_pixel(observe(k, g, pose));
    const auto tt = project_point(k, pose.translation());
    EXPECT_NEAR(cc.u, tt.u, 1e-9);
    EXPECT_NEAR(cc.v, tt.v, 1e-9);
  }
}

TEST(QuadArea, Square) {
  TagObservation a;
  a.corners = {{{0, 0}, {2, 0}, {2, 2}, {0, 2}}};
  EXPECT_DOUBLE_EQ(quad_area(a), 4.0);
}

TEST(Pnp, FrontoParallelOnAxis) {
  const auto k = Intrinsics::reference();
  const TagGeometry g{0.2};
  const RigidTransform truth(euler_zyx_to_rotation({0, 0, std::numbers::pi}), Vec3(0, 0, 1.5));
  const auto pose = solve_pnp_planar(k, g, observe(k, g, truth));
  EXPECT_LE((pose.camera_from_marker.translation() - Vec3(0, 0, 1.5)).norm(), 1e-6);
}

TEST(Pnp, FrontoParallelOffset) {
  const auto k = Intrinsics::reference();
  const TagGeometry g{0.2};
  const RigidTransform truth(euler_zyx_to_rotation({0, 0, std::numbers::pi}), Vec3(0.3, -0.2, 1.5));
  const auto pose = solve_pnp_planar(k, g, observe(k, g, truth));
  EXPECT_LE((pose.camera_from_marker.translation() - truth.translation()).norm(), 1e-6);
  EXPECT_LE((pose.camera_from_marker.rotation() - truth.rotation()).norm(), 1e-6);
}

TEST(Pnp, Collinear) {
  TagObservation obs;
  obs.corners = {{{100, 100}, {200, 100}, {300, 100}, {400, 100}}};
  try {
    solve_pnp_planar(Intrinsics::reference(), {}, obs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PnPDegenerate);
  }
}

TEST(Pnp, NoiselessRecovery200) {
  const auto k = Intrinsics::reference();
  const TagGeometry g;
  std::mt19937_64 rng(13);
  int tested = 0;
  while (tested < 200) {
    const auto truth = random_pose(rng, 25 * kDeg);
    const auto obs = observe(k, g, truth);
    if (!in_image(k, obs)) continue;
    ++tested;
    const auto pose = solve_pnp_planar(k, g, obs);
    EXPECT_LE((pose.camera_from_marker.translation() - truth.translation()).norm(), 1e-6);
    EXPECT_LE((pose.camera_from_marker.rotation() - truth.rotation()).norm(), 1e-6);
    EXPECT_LE(pose.reprojection_rms, 1e-6);
  }
}

TEST(Pnp, DepthNoiseAmplification) {
  const auto k = Intrinsics::reference();
  const TagGeometry g;
  const RigidTransform truth(euler_zyx_to_rotation({0.2, 0.1, std::numbers::pi - 0.05}), Vec3(0.05, -0.03, 1.2));
  const auto clean = observe(k, g, truth);
  std::mt19937_64 rng(14);
  std::normal_distribution<double> noise(0.0, 0.5);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
  int n = 0;
  for (int i = 0; i < 500; ++i) {
    auto obs = clean;
    for (auto& c : obs.corners) {
      c.u += noise(rng);
      c.v += noise(rng);
    }
    try {
      const Vec3 t = solve_pnp_planar(k, g, obs).camera_from_marker.translation();
      sum += t;
      sq += t.cwiseProduct(t);
      ++n;
    } catch (const Error&) {
    }
  }
  ASSERT_GT(n, 450);
  const Vec3 mean = sum / n;
  const Vec3 var = sq / n - mean.cwiseProduct(mean);
  EXPECT_GT(var.z(), var.x());
  EXPECT_GT(var.z(), var.y());
}

TEST(Reprojection, Examples) {
  const auto k = Intrinsics::reference();
  const TagGeometry g;
  const RigidTransform truth(euler_zyx_to_rotation({0, 0, std::numbers::pi}), Vec3(0, 0, 1.5));
  const auto obs = observe(k, g, truth);
  EXPECT_LE(reprojection_rms(k, g, truth, obs), 1e-9);

  const RigidTransform dz(truth.rotation(), Vec3(0, 0, 1.501));
  const double rms_z = reprojection_rms(k, g, dz, obs);
  EXPECT_GT(rms_z, 0.0);
  const RigidTransform yawed(euler_zyx_to_rotation({10 * kDeg, 0, 0}) * truth.rotation(), truth.translation());
  EXPECT_GT(reprojection_rms(k, g, yawed, obs), rms_z);
}
