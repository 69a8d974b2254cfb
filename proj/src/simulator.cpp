#include "cap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cap/error.hpp"

namespace cap {

using Vec2d = Eigen::Vector2d;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum StreamId : std::uint64_t { kImuStream = 1, kSlamStream, kDepthStream, kTagStream };

SimRng stream_rng(std::uint64_t seed, StreamId id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return SimRng(seq);
}

double gaussian(SimRng& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma);
  return n(rng);
}

Vec2d catmull_rom(const Vec2d& p0, const Vec2d& p1, const Vec2d& p2, const Vec2d& p3, double u) {
  const double u2 = u * u, u3 = u2 * u;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
}

}  // namespace

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::Square: return "square";
    case Pattern::Lawnmower: return "lawnmower";
    case Pattern::Random: return "random";
  }
  return "square";
}

Pattern pattern_from_string(std::string_view name) {
  if (name == "square") return Pattern::Square;
  if (name == "lawnmower") return Pattern::Lawnmower;
  if (name == "random") return Pattern::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown trajectory pattern '" + std::string(name) + "'");
}

void TrajectorySpec::validate() const {
  if (!(region_x > 0.0) || !(region_y > 0.0) || !(depth_max > 0.0)) {
    throw Error(ErrorCode::RegionTooSmall, "region dimensions must be positive");
  }
  if (!(speed > 0.0)) throw Error(ErrorCode::InvalidArgument, "speed must be positive");
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be positive");
  if (!(margin >= 0.0) || 2.0 * margin >= std::min(region_x, region_y)) {
    throw Error(ErrorCode::RegionTooSmall, "wall margin leaves no usable region");
  }
  const double ux = region_x - 2.0 * margin;
  const double uy = region_y - 2.0 * margin;
  switch (pattern) {
    case Pattern::Square:
      if (!(square_side > 0.0)) throw Error(ErrorCode::InvalidArgument, "square side must be positive");
      if (square_side > std::min(ux, uy)) {
        throw Error(ErrorCode::RegionTooSmall, "square does not fit inside the region");
      }
      break;
    case Pattern::Lawnmower:
      if (lawnmower_legs < 1 || !(lawnmower_length > 0.0) || !(lawnmower_spacing > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "lawnmower needs >= 1 leg and positive sizes");
      }
      if (lawnmower_length > ux || (lawnmower_legs - 1) * lawnmower_spacing > uy) {
        throw Error(ErrorCode::RegionTooSmall, "lawnmower sweep does not fit inside the region");
      }
      break;
    case Pattern::Random:
      if (random_waypoints < 3) throw Error(ErrorCode::InvalidArgument, "random chain needs >= 3 waypoints");
      break;
  }
  if (!(depth.amplitude >= 0.0) || depth.amplitude > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "depth oscillation amplitude must lie in [0, 1] m");
  }
  if (depth.amplitude > 0.0 && !(depth.period > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "depth oscillation period must be positive");
  }
  if (!(depth.mean - depth.amplitude > 0.0) || depth.mean + depth.amplitude > depth_max) {
    throw Error(ErrorCode::RegionTooSmall, "depth profile leaves the water column");
  }
}

Trajectory::Trajectory(std::vector<Vec2d> vertices, bool closed, double speed, DepthProfile depth)
    : vertices_(std::move(vertices)), closed_(closed), speed_(speed), depth_(depth) {
  if (vertices_.size() < 2) throw Error(ErrorCode::InvalidArgument, "path needs >= 2 vertices");
  if (closed_) vertices_.push_back(vertices_.front());
  cumulative_.assign(1, 0.0);
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + (vertices_[i] - vertices_[i - 1]).norm());
  }
  if (!(cumulative_.back() > 0.0)) throw Error(ErrorCode::InvalidArgument, "path has zero length");
}

double Trajectory::period() const {
  return (closed_ ? 1.0 : 2.0) * path_length() / speed_;
}

MarkerPose Trajectory::at(double t) const {
  const double length = path_length();
  double s = speed_ * t;
  bool reversed = false;
  if (closed_) {
    s = std::fmod(s, length);
  } else {
    s = std::fmod(s, 2.0 * length);
    if (s > length) {
      s = 2.0 * length - s;
      reversed = true;
    }
  }
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t seg = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  seg = std::clamp<std::size_t>(seg, 1, vertices_.size() - 1);
  // Skip zero-length segments so the heading stays defined.
  while (seg + 1 < vertices_.size() && cumulative_[seg] - cumulative_[seg - 1] <= 0.0) ++seg;
  const Vec2d& a = vertices_[seg - 1];
  const Vec2d& b = vertices_[seg];
  const double len = cumulative_[seg] - cumulative_[seg - 1];
  const double u = len > 0.0 ? std::clamp((s - cumulative_[seg - 1]) / len, 0.0, 1.0) : 0.0;
  const Vec2d p = a + u * (b - a);
  Vec2d dir = b - a;
  if (reversed) dir = -dir;

  const double d = depth_.amplitude > 0.0
                       ? depth_.mean + depth_.amplitude * std::sin(kTwoPi * t / depth_.period)
                       : depth_.mean;
  return {t, Vec3(p.x(), p.y(), -d), std::atan2(dir.y(), dir.x())};
}

std::vector<MarkerPose> Trajectory::sample(double rate, double duration) const {
  std::vector<MarkerPose> out;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(at(static_cast<double>(i) / rate));
  return out;
}

Trajectory gen_trajectory(const TrajectorySpec& spec) {
  spec.validate();
  const Vec2d centre(spec.region_x / 2.0, spec.region_y / 2.0);
  std::vector<Vec2d> v;

  switch (spec.pattern) {
    case Pattern::Square: {
      const double h = spec.square_side / 2.0;
      v = {centre + Vec2d(-h, -h), centre + Vec2d(h, -h), centre + Vec2d(h, h),
           centre + Vec2d(-h, h)};
      return Trajectory(std::move(v), true, spec.speed, spec.depth);
    }
    case Pattern::Lawnmower: {
      const double half_len = spec.lawnmower_length / 2.0;
      const double y0 = centre.y() - (spec.lawnmower_legs - 1) * spec.lawnmower_spacing / 2.0;
      for (int leg = 0; leg < spec.lawnmower_legs; ++leg) {
        const double y = y0 + leg * spec.lawnmower_spacing;
        const double xa = leg % 2 == 0 ? centre.x() - half_len : centre.x() + half_len;
        const double xb = leg % 2 == 0 ? centre.x() + half_len : centre.x() - half_len;
        v.emplace_back(xa, y);
        v.emplace_back(xb, y);
      }
      return Trajectory(std::move(v), false, spec.speed, spec.depth);
    }
    case Pattern::Random: {
      SimRng rng(spec.seed);
      std::uniform_real_distribution<double> ux(spec.margin, spec.region_x - spec.margin);
      std::uniform_real_distribution<double> uy(spec.margin, spec.region_y - spec.margin);
      std::vector<Vec2d> way;
      for (int i = 0; i < spec.random_waypoints; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        way.emplace_back(x, y);
      }
      // Closed Catmull-Rom through the waypoints, densified, kept inside the
      // usable region.
      constexpr int kSubdiv = 24;
      const std::size_t n = way.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2d& p0 = way[(i + n - 1) % n];
        const Vec2d& p1 = way[i];
        const Vec2d& p2 = way[(i + 1) % n];
        const Vec2d& p3 = way[(i + 2) % n];
        for (int j = 0; j < kSubdiv; ++j) {
          Vec2d p = catmull_rom(p0, p1, p2, p3, static_cast<double>(j) / kSubdiv);
          p.x() = std::clamp(p.x(), spec.margin, spec.region_x - spec.margin);
          p.y() = std::clamp(p.y(), spec.margin, spec.region_y - spec.margin);
          v.push_back(p);
        }
      }
      return Trajectory(std::move(v), true, spec.speed, spec.depth);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown pattern");
}

NoiseModel NoiseModel::noiseless() {
  NoiseModel n;
  n.pixel_sigma = 0.0;
  n.gyro_sigma = 0.0;
  n.accel_sigma = 0.0;
  n.depth_sigma = 0.0;
  n.slam_xy_sigma = 0.0;
  n.slam_yaw_sigma = 0.0;
  n.dropout_base = 0.0;
  n.dropout_per_metre = 0.0;
  return n;
}

double NoiseModel::dropout_probability(double depth) const {
  return std::clamp(dropout_base + dropout_per_metre * depth, 0.0, 1.0);
}

void NoiseModel::validate() const {
  for (double s : {pixel_sigma, gyro_sigma, accel_sigma, depth_sigma, slam_xy_sigma, slam_yaw_sigma}) {
    if (!(s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigmas must be >= 0");
  }
  if (!(dropout_base >= 0.0 && dropout_base <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout base probability must lie in [0, 1]");
  }
  if (!std::isfinite(dropout_per_metre)) {
    throw Error(ErrorCode::InvalidArgument, "dropout slope must be finite");
  }
  const double limit = std::numbers::pi / 2.0 - 1e-3;
  if (!(std::abs(roll_amplitude) < limit) || !(std::abs(pitch_amplitude) < limit)) {
    throw Error(ErrorCode::InvalidArgument, "tilt amplitudes must stay below 90 degrees");
  }
}

void FollowerConfig::validate() const {
  if (!(gain_x >= 0.0) || !(gain_y >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "follower gains must be >= 0");
  }
  if (!(deadband_px >= 0.0) || !(max_speed >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "follower deadband and max speed must be >= 0");
  }
}

SensorRates SensorRates::synchronous(int rate) { return {rate, rate, rate, rate, rate}; }

int SensorRates::base_rate() const {
  int base = 1;
  for (int r : {camera, imu, depth, slam, truth}) base = std::lcm(base, r);
  return base;
}

void SensorRates::validate() const {
  for (int r : {camera, imu, depth, slam, truth}) {
    if (r <= 0) throw Error(ErrorCode::InvalidArgument, "sample rates must be positive integers");
  }
  if (base_rate() > 100000) throw Error(ErrorCode::InvalidArgument, "sample rates share no small tick grid");
}

void SimulationConfig::validate() const {
  trajectory.validate();
  noise.validate();
  follower.validate();
  rates.validate();
  camera.validate();
  if (!(tag.side_length > 0.0)) throw Error(ErrorCode::InvalidArgument, "tag side must be positive");
  if (depth_truth.scale == 0.0) throw Error(ErrorCode::InvalidArgument, "depth scale must be non-zero");
}

SurfaceTruth surface_attitude(const SimulationConfig& cfg, double t) {
  const NoiseModel& n = cfg.noise;
  const double wr = kTwoPi * n.roll_frequency;
  const double wp = kTwoPi * n.pitch_frequency;
  const double wy = kTwoPi * cfg.yaw_wobble_frequency;

  SurfaceTruth s;
  s.roll = n.roll_amplitude * std::sin(wr * t);
  s.pitch = n.pitch_amplitude * std::sin(wp * t);
  s.yaw = cfg.initial_yaw + cfg.yaw_wobble_amplitude * std::sin(wy * t);
  const double roll_rate = n.roll_amplitude * wr * std::cos(wr * t);
  const double pitch_rate = n.pitch_amplitude * wp * std::cos(wp * t);
  const double yaw_rate = cfg.yaw_wobble_amplitude * wy * std::cos(wy * t);

  // Z-Y-X Euler rates to body angular velocity.
  const double sr = std::sin(s.roll), cr = std::cos(s.roll);
  const double sp = std::sin(s.pitch), cp = std::cos(s.pitch);
  s.body_rates = Vec3(roll_rate - yaw_rate * sp, pitch_rate * cr + yaw_rate * cp * sr,
                      -pitch_rate * sr + yaw_rate * cp * cr);
  return s;
}

namespace {

RigidTransform world_from_body(const SurfaceTruth& s, double body_height) {
  return RigidTransform::from_euler({s.yaw, s.pitch, s.roll}, Vec3(s.x, s.y, body_height));
}

}  // namespace

std::optional<TagObservation> project_tag(const WorldState& w, const Intrinsics& k,
                                          const RigExtrinsics& rig, const TagGeometry& geom) {
  const RigidTransform world_from_camera =
      compose(world_from_body(w.surface, rig.body_height), rig.body_from_camera);
  const RigidTransform world_from_marker =
      RigidTransform::from_euler({w.marker.yaw, 0.0, 0.0}, w.marker.position);
  const RigidTransform camera_from_marker = compose(invert(world_from_camera), world_from_marker);

  TagObservation obs;
  obs.timestamp = w.t;
  const auto corners = geom.corners();
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec3 pc = transform_point(camera_from_marker, corners[i]);
    if (!(pc.z() > 1e-6)) return std::nullopt;
    obs.corners[i] = project_point(k, pc);
    if (!k.contains(obs.corners[i].u, obs.corners[i].v)) return std::nullopt;
  }
  return obs;
}

ImuSample synth_imu(const WorldState& w, const NoiseModel& noise, SimRng& rng) {
  const Mat3 r = euler_zyx_to_rotation({w.surface.yaw, w.surface.pitch, w.surface.roll});
  const Vec3 gravity_body = r.transpose() * Vec3(0.0, 0.0, -kGravity);
  ImuSample s;
  s.timestamp = w.t;
  for (int i = 0; i < 3; ++i) s.gyro(i) = w.surface.body_rates(i) + gaussian(rng, noise.gyro_sigma);
  for (int i = 0; i < 3; ++i) s.accel(i) = gravity_body(i) + gaussian(rng, noise.accel_sigma);
  return s;
}

SlamPose synth_slam(const WorldState& w, const NoiseModel& noise, SimRng& rng) {
  SlamPose s;
  s.timestamp = w.t;
  s.x = w.surface.x + gaussian(rng, noise.slam_xy_sigma);
  s.y = w.surface.y + gaussian(rng, noise.slam_xy_sigma);
  s.yaw = w.surface.yaw + gaussian(rng, noise.slam_yaw_sigma);
  return s;
}

RawDepth synth_depth(const WorldState& w, const NoiseModel& noise, const CalibrationParams& truth,
                     SimRng& rng) {
  const double depth = -w.marker.position.z();
  return {w.t, (depth - truth.offset) / truth.scale + gaussian(rng, noise.depth_sigma)};
}

std::optional<TagObservation> synth_tag(const WorldState& w, const NoiseModel& noise,
                                        const Intrinsics& k, const RigExtrinsics& rig,
                                        const TagGeometry& geom, SimRng& rng) {
  auto obs = project_tag(w, k, rig, geom);
  if (!obs) return std::nullopt;
  const double p_drop = noise.dropout_probability(-w.marker.position.z());
  if (p_drop > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < p_drop) return std::nullopt;
  }
  for (auto& c : obs->corners) {
    const double du = gaussian(rng, noise.pixel_sigma);
    const double dv = gaussian(rng, noise.pixel_sigma);
    c.u += du;
    c.v += dv;
  }
  return obs;
}

RawSensorFrame simulate_sensors(const WorldState& w, const NoiseModel& noise, const Intrinsics& k,
                                const RigExtrinsics& rig, const TagGeometry& geom,
                                const CalibrationParams& depth_truth, SimRng& rng) {
  RawSensorFrame f;
  f.truth = {w.t, w.marker.position};
  f.imu = synth_imu(w, noise, rng);
  f.slam = synth_slam(w, noise, rng);
  f.depth = synth_depth(w, noise, depth_truth, rng);
  f.tag = synth_tag(w, noise, k, rig, geom, rng);
  return f;
}

Eigen::Vector2d follower_command(const std::optional<TagObservation>& obs,
                                 const FollowerConfig& cfg, const Intrinsics& k,
                                 const RigExtrinsics& rig, double yaw) {
  if (!obs) throw Error(ErrorCode::TagNotVisible, "no tag in the current frame");
  const PixelPoint c = tag_center_pixel(*obs);
  const double eu = c.u - k.cx;
  const double ev = c.v - k.cy;
  if (std::hypot(eu, ev) <= cfg.deadband_px) return Vec2d::Zero();

  // Pixel error expressed along the body axes, then rotated into the world.
  const Vec3 e_body = rig.body_from_camera.rotation() * Vec3(eu, ev, 0.0);
  const Vec2d cmd_body(cfg.gain_x * e_body.x(), cfg.gain_y * e_body.y());
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Vec2d cmd(cy * cmd_body.x() - sy * cmd_body.y(), sy * cmd_body.x() + cy * cmd_body.y());
  const double speed = cmd.norm();
  if (speed > cfg.max_speed) cmd *= cfg.max_speed / speed;
  return cmd;
}

Eigen::Vector2d Follower::on_frame(const std::optional<TagObservation>& obs, const Intrinsics& k,
                                   const RigExtrinsics& rig, double yaw) {
  try {
    held_ = follower_command(obs, cfg_, k, rig, yaw);
    lost_ = false;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TagNotVisible) throw;
    if (!lost_) {
      lost_ = true;
      lost_for_ = 0.0;
    }
  }
  return held_;
}

Eigen::Vector2d Follower::advance(double dt) {
  if (!lost_) return held_;
  const double scale = std::max(0.0, 1.0 - lost_for_);
  lost_for_ += dt;
  return held_ * scale;
}

Simulator::Simulator(SimulationConfig cfg)
    : cfg_(std::move(cfg)), trajectory_((cfg_.validate(), gen_trajectory(cfg_.trajectory))) {}

SimulationSummary Simulator::run(const Sink& sink) {
  const int base = cfg_.rates.base_rate();
  const auto ticks = static_cast<long long>(std::llround(cfg_.trajectory.duration * base));
  const double dt = 1.0 / base;
  const int every_camera = base / cfg_.rates.camera;
  const int every_imu = base / cfg_.rates.imu;
  const int every_depth = base / cfg_.rates.depth;
  const int every_slam = base / cfg_.rates.slam;
  const int every_truth = base / cfg_.rates.truth;

  SimRng imu_rng = stream_rng(cfg_.noise.seed, kImuStream);
  SimRng slam_rng = stream_rng(cfg_.noise.seed, kSlamStream);
  SimRng depth_rng = stream_rng(cfg_.noise.seed, kDepthStream);
  SimRng tag_rng = stream_rng(cfg_.noise.seed, kTagStream);

  Follower follower(cfg_.follower);
  const RigExtrinsics& rig = cfg_.rig;

  // Start with the camera centre above the marker.
  const MarkerPose m0 = trajectory_.at(0.0);
  const SurfaceTruth a0 = surface_attitude(cfg_, 0.0);
  const Vec3 cam_offset = rig.body_from_camera.translation();
  double x = m0.position.x() - (std::cos(a0.yaw) * cam_offset.x() - std::sin(a0.yaw) * cam_offset.y());
  double y = m0.position.y() - (std::sin(a0.yaw) * cam_offset.x() + std::cos(a0.yaw) * cam_offset.y());

  SimulationSummary summary;
  for (long long k = 0; k < ticks; ++k) {
    WorldState w;
    w.t = static_cast<double>(k) / base;
    w.marker = trajectory_.at(w.t);
    w.surface = surface_attitude(cfg_, w.t);
    w.surface.x = x;
    w.surface.y = y;

    if (k % every_truth == 0) {
      sink(TruthSample{w.t, w.marker.position});
      ++summary.truth;
    }
    if (k % every_imu == 0) {
      sink(synth_imu(w, cfg_.noise, imu_rng));
      ++summary.imu;
    }
    if (k % every_slam == 0) {
      sink(synth_slam(w, cfg_.noise, slam_rng));
      ++summary.slam;
    }
    if (k % every_depth == 0) {
      sink(synth_depth(w, cfg_.noise, cfg_.depth_truth, depth_rng));
      ++summary.depth;
    }
    if (k % every_camera == 0) {
      ++summary.camera_frames;
      if (project_tag(w, cfg_.camera, rig, cfg_.tag)) ++summary.frames_in_view;
      const auto obs = synth_tag(w, cfg_.noise, cfg_.camera, rig, cfg_.tag, tag_rng);
      if (obs) {
        sink(*obs);
        ++summary.tags;
      }
      follower.on_frame(obs, cfg_.camera, rig, w.surface.yaw);
    }

    const Vec2d v = follower.advance(dt);
    x += v.x() * dt;
    y += v.y() * dt;
    x = std::clamp(x, 0.0, cfg_.trajectory.region_x);
    y = std::clamp(y, 0.0, cfg_.trajectory.region_y);
  }
  summary.ticks = static_cast<std::size_t>(ticks);
  return summary;
}

}  // namespace cap
