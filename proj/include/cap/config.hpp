#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cap/calibration.hpp"
#include "cap/pipeline.hpp"
#include "cap/simulator.hpp"

namespace cap {

/// Everything a CLI run needs. Loaded from a JSON document; absent keys keep
/// their defaults. Layout:
///
///   {
///     "intrinsics": {...} | "intrinsics_file": "camera.json",
///     "extrinsics": {"translation": [x, y, z], "euler_zyx": [yaw, pitch, roll]},
///     "body_height": 0.05,
///     "tag_side": 0.15,
///     "depth_calibration": {"scale": s, "offset": o} | "depth_calibration_file": "theta.json",
///     "staleness_bound": 0.2,
///     "marker_offset": [x, y, z],
///     "ekf": {"process_noise": [q, q], "measurement_noise": [r, r],
///             "initial_covariance": [p, p], "imu_euler_zyx": [y, p, r]},
///     "simulation": {"trajectory": {...}, "noise": {...}, "follower": {...},
///                    "rates": {...}, "depth_truth": {...}, "initial_yaw": ..},
///     "pso": {...},
///     "seed": 1
///   }
///
/// Intrinsics files mirror the camera calibration report:
///   {"image_width": 800, "image_height": 600,
///    "camera_matrix": [[fx, 0, cx], [0, fy, cy], [0, 0, 1]],
///    "distortion_coefficients": [k1, k2, p1, p2, k3]}
struct RunConfig {
  PipelineConfig pipeline;
  SimulationConfig simulation;
  PsoConfig pso;
  std::uint64_t seed = 1;
  /// Non-fatal notes gathered while loading (e.g. ignored distortion).
  std::vector<std::string> warnings;

  /// Propagates the seed into the trajectory, noise and PSO generators.
  void apply_seed(std::uint64_t s);
};

/// Throws ConfigError with the offending key on malformed input. Relative file
/// references resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

Intrinsics intrinsics_from_json(const nlohmann::json& j, std::vector<std::string>* warnings = nullptr);
nlohmann::json intrinsics_to_json(const Intrinsics& k);

CalibrationParams calibration_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const CalibrationParams& p);

/// The "noiseless" preset used by the exactness checks: zero noise, every
/// stream on the camera clock and an accelerometer-trusting tilt filter.
RunConfig noiseless_run_config(Pattern pattern, std::uint64_t seed = 1);

}  // namespace cap
