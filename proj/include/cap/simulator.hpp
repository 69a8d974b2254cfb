#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "cap/calibration.hpp"
#include "cap/camera.hpp"
#include "cap/dataset.hpp"
#include "cap/estimators.hpp"

namespace cap {

enum class Pattern { Square, Lawnmower, Random };

std::string_view to_string(Pattern p);
/// Throws InvalidArgument for unknown names.
Pattern pattern_from_string(std::string_view name);

/// Marker depth d(t) = mean + amplitude * sin(2 pi t / period), positive down.
/// amplitude = 0 gives a fixed depth.
struct DepthProfile {
  double mean = 1.2;
  double amplitude = 0.4;
  double period = 40.0;
};

struct TrajectorySpec {
  Pattern pattern = Pattern::Square;
  double region_x = 4.8;  // tank length, m
  double region_y = 3.6;  // tank width, m
  double depth_max = 2.0;
  double margin = 0.4;  // keep-out band along the walls, m
  double square_side = 2.0;
  int lawnmower_legs = 3;
  double lawnmower_spacing = 1.0;
  double lawnmower_length = 2.4;
  int random_waypoints = 8;
  DepthProfile depth;
  double speed = 0.1;  // m/s along the path
  double duration = 120.0;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument for non-positive sizes and RegionTooSmall when the
  /// pattern or depth profile does not fit inside the region.
  void validate() const;
};

struct MarkerPose {
  double timestamp = 0.0;
  Vec3 position = Vec3::Zero();  // world frame, z = -depth
  double yaw = 0.0;              // heading of the current path segment
};

/// Constant-speed traversal of a planar polyline. Closed paths loop; open
/// paths (lawnmower) run back and forth.
class Trajectory {
 public:
  Trajectory(std::vector<Eigen::Vector2d> vertices, bool closed, double speed, DepthProfile depth);

  MarkerPose at(double t) const;
  std::vector<MarkerPose> sample(double rate, double duration) const;

  /// Closed paths repeat the first vertex at the end.
  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  bool closed() const { return closed_; }
  double path_length() const { return cumulative_.back(); }
  /// Time to return to the start.
  double period() const;

 private:
  std::vector<Eigen::Vector2d> vertices_;
  std::vector<double> cumulative_;
  bool closed_;
  double speed_;
  DepthProfile depth_;
};

Trajectory gen_trajectory(const TrajectorySpec& spec);

/// Surface-vehicle tilt/yaw model and sensor noise. Tilt is a scripted wave:
/// roll(t) = A_r sin(2 pi f_r t), pitch(t) = A_p sin(2 pi f_p t).
struct NoiseModel {
  double pixel_sigma = 0.5;
  double gyro_sigma = 1e-3;
  double accel_sigma = 0.02;
  double depth_sigma = 0.002;
  double slam_xy_sigma = 0.005;
  double slam_yaw_sigma = 0.2 * 3.14159265358979323846 / 180.0;
  double roll_amplitude = 5.0 * 3.14159265358979323846 / 180.0;
  double roll_frequency = 0.5;
  double pitch_amplitude = 7.0 * 3.14159265358979323846 / 180.0;
  double pitch_frequency = 0.35;
  /// Detection dropout p(d) = clamp(base + per_metre * d, 0, 1).
  double dropout_base = 0.0;
  double dropout_per_metre = 0.0;
  std::uint64_t seed = 1;

  /// Same tilt wave, every sigma and dropout zero.
  static NoiseModel noiseless();
  double dropout_probability(double depth) const;
  void validate() const;
};

struct FollowerConfig {
  double gain_x = 0.004;  // m/s per pixel
  double gain_y = 0.004;
  double deadband_px = 2.0;
  double max_speed = 0.5;

  void validate() const;
};

/// Integer sample rates in Hz. Every stream is sampled on the tick grid of
/// lcm(rates), so coincident samples carry identical timestamps.
struct SensorRates {
  int camera = 30;
  int imu = 100;
  int depth = 15;
  int slam = 40;
  int truth = 100;

  /// Every stream at one rate.
  static SensorRates synchronous(int rate = 30);
  int base_rate() const;
  void validate() const;
};

struct SurfaceTruth {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  Vec3 body_rates = Vec3::Zero();
};

struct WorldState {
  double t = 0.0;
  MarkerPose marker;
  SurfaceTruth surface;
};

struct SimulationConfig {
  TrajectorySpec trajectory;
  NoiseModel noise;
  FollowerConfig follower;
  SensorRates rates;
  Intrinsics camera = Intrinsics::reference();
  RigExtrinsics rig = RigExtrinsics::reference();
  TagGeometry tag;
  /// The sensor's true affine model; raw = (depth - offset) / scale.
  CalibrationParams depth_truth{1.02, -0.03};
  double initial_yaw = 0.3;
  double yaw_wobble_amplitude = 3.0 * 3.14159265358979323846 / 180.0;
  double yaw_wobble_frequency = 0.05;

  void validate() const;
};

/// Tilt and yaw of the surface vehicle at time t plus body rates.
SurfaceTruth surface_attitude(const SimulationConfig& cfg, double t);

/// Noise-free tag corners for the given world state; nullopt if any corner is
/// behind the camera or outside the image.
std::optional<TagObservation> project_tag(const WorldState& w, const Intrinsics& k,
                                          const RigExtrinsics& rig, const TagGeometry& geom);

using SimRng = std::mt19937_64;

ImuSample synth_imu(const WorldState& w, const NoiseModel& noise, SimRng& rng);
SlamPose synth_slam(const WorldState& w, const NoiseModel& noise, SimRng& rng);
RawDepth synth_depth(const WorldState& w, const NoiseModel& noise, const CalibrationParams& truth,
                     SimRng& rng);
/// Applies dropout then pixel noise; nullopt when out of view or dropped.
std::optional<TagObservation> synth_tag(const WorldState& w, const NoiseModel& noise,
                                        const Intrinsics& k, const RigExtrinsics& rig,
                                        const TagGeometry& geom, SimRng& rng);

/// One sample of every sensor at w.t.
struct RawSensorFrame {
  ImuSample imu;
  SlamPose slam;
  RawDepth depth;
  std::optional<TagObservation> tag;
  TruthSample truth;
};

RawSensorFrame simulate_sensors(const WorldState& w, const NoiseModel& noise, const Intrinsics& k,
                                const RigExtrinsics& rig, const TagGeometry& geom,
                                const CalibrationParams& depth_truth, SimRng& rng);

/// Planar world-frame velocity command that drives the tag centre toward the
/// principal point. Zero inside the deadband, norm clamped to max_speed.
/// Throws TagNotVisible when `obs` is empty.
Eigen::Vector2d follower_command(const std::optional<TagObservation>& obs,
                                 const FollowerConfig& cfg, const Intrinsics& k,
                                 const RigExtrinsics& rig, double yaw);

/// Stateful follower: holds the last command after the tag is lost and ramps
/// it linearly to zero over one second.
class Follower {
 public:
  explicit Follower(FollowerConfig cfg) : cfg_(cfg) {}

  Eigen::Vector2d on_frame(const std::optional<TagObservation>& obs, const Intrinsics& k,
                           const RigExtrinsics& rig, double yaw);
  /// Command to apply over the next dt seconds.
  Eigen::Vector2d advance(double dt);

 private:
  FollowerConfig cfg_;
  Eigen::Vector2d held_ = Eigen::Vector2d::Zero();
  double lost_for_ = 0.0;
  bool lost_ = false;
};

struct SimulationSummary {
  std::size_t ticks = 0;
  std::size_t camera_frames = 0;
  std::size_t frames_in_view = 0;  // before dropout
  std::size_t tags = 0;
  std::size_t imu = 0;
  std::size_t slam = 0;
  std::size_t depth = 0;
  std::size_t truth = 0;

  double in_view_fraction() const {
    return camera_frames == 0 ? 0.0 : static_cast<double>(frames_in_view) / camera_frames;
  }
};

/// Stepped closed-loop simulation emitting a merged, time-ordered record
/// stream. Within one tick the order is truth, imu, slam, depth, tag.
class Simulator {
 public:
  explicit Simulator(SimulationConfig cfg);

  using Sink = std::function<void(const DatasetRecord&)>;
  SimulationSummary run(const Sink& sink);

  /// Ground truth at an arbitrary time of the last run (marker only; the
  /// surface vehicle trajectory depends on the closed loop).
  MarkerPose marker_at(double t) const { return trajectory_.at(t); }
  const SimulationConfig& config() const { return cfg_; }
  const Trajectory& trajectory() const { return trajectory_; }

 private:
  SimulationConfig cfg_;
  Trajectory trajectory_;
};

}  // namespace cap
