#include "cap/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cap/error.hpp"

namespace cap {

Intrinsics Intrinsics::reference() {
  Intrinsics k;
  k.fx = 514.177765;
  k.fy = 513.054629;
  k.cx = 346.861136;
  k.cy = 220.015799;
  k.width = 800;
  k.height = 600;
  k.distortion = {0.073902, -0.032694, -0.001420, -0.002268, 0.000000};
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
  }
}

Mat3 Intrinsics::matrix() const {
  Mat3 m;
  m << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return m;
}

bool Intrinsics::contains(double u, double v) const {
  return u >= 0.0 && v >= 0.0 && u < width && v < height;
}

std::array<Vec3, 4> TagGeometry::corners() const {
  const double h = side_length / 2.0;
  return {Vec3(-h, -h, 0.0), Vec3(h, -h, 0.0), Vec3(h, h, 0.0), Vec3(-h, h, 0.0)};
}

Vec3 back_project(const Intrinsics& k, const PixelPoint& px) {
  return {(px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0};
}

PixelPoint project_point(const Intrinsics& k, const Vec3& p_cam) {
  if (!(p_cam.z() > 1e-6)) {
    throw Error(ErrorCode::BehindCamera, "point is not in front of the camera");
  }
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

PixelPoint tag_center_pixel(const TagObservation& obs) {
  // Intersection of the diagonals 0-2 and 1-3; falls back to the corner mean
  // when the diagonals are (nearly) parallel.
  const auto& c = obs.corners;
  const double d1u = c[2].u - c[0].u, d1v = c[2].v - c[0].v;
  const double d2u = c[3].u - c[1].u, d2v = c[3].v - c[1].v;
  const double den = d1u * d2v - d1v * d2u;
  if (std::abs(den) < 1e-12) {
    return {(c[0].u + c[1].u + c[2].u + c[3].u) / 4.0, (c[0].v + c[1].v + c[2].v + c[3].v) / 4.0};
  }
  const double s = ((c[1].u - c[0].u) * d2v - (c[1].v - c[0].v) * d2u) / den;
  return {c[0].u + s * d1u, c[0].v + s * d1v};
}

double quad_area(const TagObservation& obs) {
  double twice = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = obs.corners[i];
    const auto& b = obs.corners[(i + 1) % 4];
    twice += a.u * b.v - b.u * a.v;
  }
  return std::abs(twice) / 2.0;
}

double reprojection_rms(const Intrinsics& k, const TagGeometry& geom,
                        const RigidTransform& camera_from_marker, const TagObservation& obs) {
  const auto corners = geom.corners();
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const PixelPoint p = project_point(k, transform_point(camera_from_marker, corners[i]));
    const double du = p.u - obs.corners[i].u;
    const double dv = p.v - obs.corners[i].v;
    sum += du * du + dv * dv;
  }
  return std::sqrt(sum / 4.0);
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat86 = Eigen::Matrix<double, 8, 6>;

double triangle_area(const PixelPoint& a, const PixelPoint& b, const PixelPoint& c) {
  return std::abs((b.u - a.u) * (c.v - a.v) - (c.u - a.u) * (b.v - a.v)) / 2.0;
}

void check_observation(const TagObservation& obs) {
  for (const auto& p : obs.corners) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
      throw Error(ErrorCode::PnPDegenerate, "non-finite corner pixel");
    }
  }
  if (quad_area(obs) <= 1.0) {
    throw Error(ErrorCode::PnPDegenerate, "tag quad area below 1 px^2");
  }
  const auto& c = obs.corners;
  for (std::size_t skip = 0; skip < 4; ++skip) {
    std::array<PixelPoint, 3> tri;
    std::size_t n = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (i != skip) tri[n++] = c[i];
    }
    if (triangle_area(tri[0], tri[1], tri[2]) <= 0.25) {
      throw Error(ErrorCode::PnPDegenerate, "three tag corners are collinear");
    }
  }
}

// Returns +inf when any corner lands behind the camera.
double residuals(const Intrinsics& k, const std::array<Vec3, 4>& model, const Mat3& r,
                 const Vec3& t, const TagObservation& obs, Vec8* res, Mat86* jac) {
  double cost = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec3 rx = r * model[i];
    const Vec3 pc = rx + t;
    if (!(pc.z() > 1e-6)) return std::numeric_limits<double>::infinity();
    const double iz = 1.0 / pc.z();
    const double u = k.fx * pc.x() * iz + k.cx;
    const double v = k.fy * pc.y() * iz + k.cy;
    const double du = u - obs.corners[i].u;
    const double dv = v - obs.corners[i].v;
    cost += du * du + dv * dv;
    if (res != nullptr) {
      (*res)(2 * i) = du;
      (*res)(2 * i + 1) = dv;
    }
    if (jac != nullptr) {
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz,
               0.0, k.fy * iz, -k.fy * pc.y() * iz * iz;
      Mat3 skew;
      skew << 0.0, -rx.z(), rx.y(), rx.z(), 0.0, -rx.x(), -rx.y(), rx.x(), 0.0;
      jac->block<2, 3>(2 * i, 0) = -dproj * skew;
      jac->block<2, 3>(2 * i, 3) = dproj;
    }
  }
  return cost;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

struct Candidate {
  Mat3 rotation;
  Vec3 translation;
};

Candidate homography_pose(const Intrinsics& k, const TagGeometry& geom, const TagObservation& obs) {
  // Marker plane coordinates scaled to unit-ish magnitude for conditioning.
  const auto model = geom.corners();
  const double scale = 1.0 / geom.side_length;
  Eigen::Matrix<double, 8, 9> a = Eigen::Matrix<double, 8, 9>::Zero();
  for (std::size_t i = 0; i < 4; ++i) {
    const double x = model[i].x() * scale;
    const double y = model[i].y() * scale;
    const Vec3 m = back_project(k, obs.corners[i]);
    const double u = m.x(), v = m.y();
    a.row(2 * i) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hm;
  hm << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  // Undo the model scaling on the in-plane columns.
  Vec3 h1 = hm.col(0) * scale;
  Vec3 h2 = hm.col(1) * scale;
  Vec3 h3 = hm.col(2);

  double lambda = 2.0 / (h1.norm() + h2.norm());
  if (h3.z() * lambda < 0.0) lambda = -lambda;
  Mat3 r;
  r.col(0) = h1 * lambda;
  r.col(1) = h2 * lambda;
  r.col(2) = r.col(0).cross(r.col(1));
  return {nearest_rotation(r), h3 * lambda};
}

Candidate mirrored(const Candidate& c) {
  const Vec3 n = c.rotation.col(2);
  const Vec3 v = c.translation.normalized();
  const Vec3 n2 = 2.0 * n.dot(v) * v - n;
  const Vec3 axis = n.cross(n2);
  const double s = axis.norm();
  if (s < 1e-12) return c;
  const double angle = std::atan2(s, n.dot(n2));
  const Mat3 align = Eigen::AngleAxisd(angle, axis / s).toRotationMatrix();
  return {nearest_rotation(align * c.rotation), c.translation};
}

struct Refined {
  Candidate pose;
  double cost;
  bool converged = true;
};

Refined refine(const Intrinsics& k, const TagGeometry& geom, const TagObservation& obs,
               Candidate pose, const PnpOptions& options) {
  const auto model = geom.corners();
  Vec8 res;
  Mat86 jac;
  double cost = residuals(k, model, pose.rotation, pose.translation, obs, &res, &jac);
  if (!std::isfinite(cost)) return {pose, cost, false};
  double damping = 1e-3;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Mat6 jtj = jac.transpose() * jac;
    const Vec6 g = jac.transpose() * res;
    Mat6 lhs = jtj;
    lhs.diagonal() += damping * jtj.diagonal().cwiseMax(1e-12);
    const Vec6 step = lhs.ldlt().solve(-g);
    if (!step.allFinite()) break;
    if (step.norm() < options.step_tolerance) return {pose, cost};

    const Vec3 w = step.head<3>();
    const double angle = w.norm();
    const Mat3 dr = angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix()
                                : Mat3::Identity();
    const Candidate trial{nearest_rotation(dr * pose.rotation), pose.translation + step.tail<3>()};
    Vec8 trial_res;
    Mat86 trial_jac;
    const double trial_cost =
        residuals(k, model, trial.rotation, trial.translation, obs, &trial_res, &trial_jac);
    if (trial_cost <= cost) {
      // Numerically flat: the accepted step no longer changes the cost.
      const bool stalled = cost - trial_cost <= 1e-15 * cost;
      pose = trial;
      cost = trial_cost;
      res = trial_res;
      jac = trial_jac;
      damping = std::max(damping / 10.0, 1e-12);
      if (stalled) return {pose, cost};
    } else {
      damping *= 10.0;
    }
  }
  return {pose, cost, false};
}

}  // namespace

TagPose solve_pnp_planar(const Intrinsics& k, const TagGeometry& geom, const TagObservation& obs,
                         const PnpOptions& options) {
  if (!(geom.side_length > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tag side length must be positive");
  }
  check_observation(obs);

  const Candidate direct = homography_pose(k, geom, obs);
  if (!direct.rotation.allFinite() || !direct.translation.allFinite() ||
      !(direct.translation.z() > 0.0)) {
    throw Error(ErrorCode::PnPDegenerate, "homography decomposition failed");
  }
  std::array<Refined, 2> refined{refine(k, geom, obs, direct, options),
                                 refine(k, geom, obs, mirrored(direct), options)};

  if (!refined[0].converged && !refined[1].converged) {
    throw Error(ErrorCode::PnPNoConvergence, "pose refinement hit the iteration cap");
  }
  auto facing = [](const Refined& r) {
    return r.converged && std::isfinite(r.cost) && r.pose.rotation.col(2).dot(r.pose.translation) < 0.0;
  };
  const Refined* best = nullptr;
  for (const auto& r : refined) {
    if (!facing(r)) continue;
    if (best == nullptr || r.cost < best->cost) best = &r;
  }
  if (best == nullptr) {
    for (const auto& r : refined) {
      if (!r.converged || !std::isfinite(r.cost)) continue;
      if (best == nullptr || r.cost < best->cost) best = &r;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorCode::PnPDegenerate, "no candidate pose places the tag in front of the camera");
  }
  const RigidTransform pose(best->pose.rotation, best->pose.translation);
  return {pose, std::sqrt(best->cost / 4.0)};
}

}  // namespace cap
