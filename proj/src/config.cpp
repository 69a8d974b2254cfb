#include "cap/config.hpp"

#include <fstream>

#include "cap/error.hpp"

namespace cap {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ConfigError, "'" + key + "': " + why);
}

void read(const json& j, const char* key, double& out, const std::string& prefix = {}) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number()) bad(prefix + key, "expected a number");
  out = it->get<double>();
}

void read(const json& j, const char* key, int& out, const std::string& prefix = {}) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_integer()) bad(prefix + key, "expected an integer");
  out = it->get<int>();
}

void read(const json& j, const char* key, std::uint64_t& out, const std::string& prefix = {}) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
    bad(prefix + key, "expected a non-negative integer");
  }
  out = it->get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& key, std::size_t n) {
  if (!j.is_array() || j.size() != n) bad(key, "expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) bad(key, "expected numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

Mat2 diag2(const json& j, const std::string& key) {
  const auto v = numbers(j, key, 2);
  Mat2 m = Mat2::Zero();
  m(0, 0) = v[0];
  m(1, 1) = v[1];
  return m;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, "'" + path.string() + "': " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
  std::filesystem::path p(file);
  return p.is_absolute() || base.empty() ? p : base / p;
}

void read_trajectory(const json& j, TrajectorySpec& s) {
  const std::string p = "simulation.trajectory.";
  if (const auto it = j.find("pattern"); it != j.end()) {
    if (!it->is_string()) bad(p + "pattern", "expected a string");
    try {
      s.pattern = pattern_from_string(it->get<std::string>());
    } catch (const Error& e) {
      bad(p + "pattern", e.what());
    }
  }
  if (const auto it = j.find("region"); it != j.end()) {
    const auto v = numbers(*it, p + "region", 3);
    s.region_x = v[0];
    s.region_y = v[1];
    s.depth_max = v[2];
  }
  read(j, "margin", s.margin, p);
  read(j, "square_side", s.square_side, p);
  read(j, "lawnmower_legs", s.lawnmower_legs, p);
  read(j, "lawnmower_spacing", s.lawnmower_spacing, p);
  read(j, "lawnmower_length", s.lawnmower_length, p);
  read(j, "random_waypoints", s.random_waypoints, p);
  read(j, "speed", s.speed, p);
  read(j, "duration", s.duration, p);
  if (const auto it = j.find("depth"); it != j.end()) {
    read(*it, "mean", s.depth.mean, p + "depth.");
    read(*it, "amplitude", s.depth.amplitude, p + "depth.");
    read(*it, "period", s.depth.period, p + "depth.");
  }
}

void read_noise(const json& j, NoiseModel& n) {
  const std::string p = "simulation.noise.";
  read(j, "pixel_sigma", n.pixel_sigma, p);
  read(j, "gyro_sigma", n.gyro_sigma, p);
  read(j, "accel_sigma", n.accel_sigma, p);
  read(j, "depth_sigma", n.depth_sigma, p);
  read(j, "slam_xy_sigma", n.slam_xy_sigma, p);
  read(j, "slam_yaw_sigma", n.slam_yaw_sigma, p);
  read(j, "roll_amplitude", n.roll_amplitude, p);
  read(j, "roll_frequency", n.roll_frequency, p);
  read(j, "pitch_amplitude", n.pitch_amplitude, p);
  read(j, "pitch_frequency", n.pitch_frequency, p);
  read(j, "dropout_base", n.dropout_base, p);
  read(j, "dropout_per_metre", n.dropout_per_metre, p);
}

void read_rates(const json& j, SensorRates& r) {
  const std::string p = "simulation.rates.";
  read(j, "camera", r.camera, p);
  read(j, "imu", r.imu, p);
  read(j, "depth", r.depth, p);
  read(j, "slam", r.slam, p);
  read(j, "truth", r.truth, p);
}

void read_follower(const json& j, FollowerConfig& f) {
  const std::string p = "simulation.follower.";
  read(j, "gain_x", f.gain_x, p);
  read(j, "gain_y", f.gain_y, p);
  read(j, "deadband_px", f.deadband_px, p);
  read(j, "max_speed", f.max_speed, p);
}

void read_pso(const json& j, PsoConfig& c) {
  const std::string p = "pso.";
  read(j, "swarm_size", c.swarm_size, p);
  read(j, "iterations", c.iterations, p);
  read(j, "inertia", c.inertia, p);
  read(j, "cognitive", c.cognitive, p);
  read(j, "social", c.social, p);
  read(j, "velocity_clamp", c.velocity_clamp, p);
  if (const auto it = j.find("scale_bounds"); it != j.end()) {
    const auto v = numbers(*it, p + "scale_bounds", 2);
    c.scale_min = v[0];
    c.scale_max = v[1];
  }
  if (const auto it = j.find("offset_bounds"); it != j.end()) {
    const auto v = numbers(*it, p + "offset_bounds", 2);
    c.offset_min = v[0];
    c.offset_max = v[1];
  }
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  simulation.trajectory.seed = s;
  simulation.noise.seed = s;
  pso.seed = s;
}

Intrinsics intrinsics_from_json(const json& j, std::vector<std::string>* warnings) {
  if (!j.is_object()) bad("intrinsics", "expected an object");
  Intrinsics k;
  read(j, "image_width", k.width, "intrinsics.");
  read(j, "image_height", k.height, "intrinsics.");
  const auto it = j.find("camera_matrix");
  if (it == j.end() || !it->is_array() || it->size() != 3) {
    bad("intrinsics.camera_matrix", "expected a 3x3 array");
  }
  std::vector<std::vector<double>> m;
  for (const auto& row : *it) m.push_back(numbers(row, "intrinsics.camera_matrix", 3));
  if (m[0][1] != 0.0 || m[1][0] != 0.0 || m[2][0] != 0.0 || m[2][1] != 0.0 || m[2][2] != 1.0) {
    bad("intrinsics.camera_matrix", "expected [[fx,0,cx],[0,fy,cy],[0,0,1]]");
  }
  k.fx = m[0][0];
  k.cx = m[0][2];
  k.fy = m[1][1];
  k.cy = m[1][2];
  if (const auto d = j.find("distortion_coefficients"); d != j.end()) {
    if (!d->is_array()) bad("intrinsics.distortion_coefficients", "expected an array");
    for (const auto& e : *d) {
      if (!e.is_number()) bad("intrinsics.distortion_coefficients", "expected numbers");
      k.distortion.push_back(e.get<double>());
    }
  }
  try {
    k.validate();
  } catch (const Error& e) {
    bad("intrinsics", e.what());
  }
  const bool distorted =
      std::any_of(k.distortion.begin(), k.distortion.end(), [](double c) { return c != 0.0; });
  if (distorted && warnings != nullptr) {
    warnings->push_back("distortion coefficients are ignored; inputs are treated as rectified");
  }
  return k;
}

json intrinsics_to_json(const Intrinsics& k) {
  return {{"image_width", k.width},
          {"image_height", k.height},
          {"camera_matrix", {{k.fx, 0.0, k.cx}, {0.0, k.fy, k.cy}, {0.0, 0.0, 1.0}}},
          {"distortion_coefficients", k.distortion}};
}

CalibrationParams calibration_from_json(const json& j) {
  if (!j.is_object()) bad("depth_calibration", "expected an object");
  CalibrationParams p;
  read(j, "scale", p.scale, "depth_calibration.");
  read(j, "offset", p.offset, "depth_calibration.");
  if (p.scale == 0.0) bad("depth_calibration.scale", "must be non-zero");
  return p;
}

json calibration_to_json(const CalibrationParams& p) {
  return {{"scale", p.scale}, {"offset", p.offset}};
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "configuration must be a JSON object");
  RunConfig cfg;
  PipelineConfig& pc = cfg.pipeline;

  if (const auto it = j.find("intrinsics_file"); it != j.end()) {
    if (!it->is_string()) bad("intrinsics_file", "expected a path");
    pc.camera = intrinsics_from_json(load_json_file(resolve(base_dir, it->get<std::string>())),
                                     &cfg.warnings);
  }
  if (const auto it = j.find("intrinsics"); it != j.end()) {
    pc.camera = intrinsics_from_json(*it, &cfg.warnings);
  }
  if (const auto it = j.find("extrinsics"); it != j.end()) {
    Vec3 t = pc.rig.body_from_camera.translation();
    if (const auto tr = it->find("translation"); tr != it->end()) {
      const auto v = numbers(*tr, "extrinsics.translation", 3);
      t = Vec3(v[0], v[1], v[2]);
    }
    if (const auto eu = it->find("euler_zyx"); eu != it->end()) {
      const auto v = numbers(*eu, "extrinsics.euler_zyx", 3);
      try {
        pc.rig.body_from_camera = RigidTransform::from_euler({v[0], v[1], v[2]}, t);
      } catch (const Error& e) {
        bad("extrinsics.euler_zyx", e.what());
      }
    } else {
      pc.rig.body_from_camera = RigidTransform(pc.rig.body_from_camera.rotation(), t);
    }
  }
  read(j, "body_height", pc.rig.body_height);
  read(j, "tag_side", pc.tag.side_length);
  if (!(pc.tag.side_length > 0.0)) bad("tag_side", "must be positive");

  if (const auto it = j.find("depth_calibration_file"); it != j.end()) {
    if (!it->is_string()) bad("depth_calibration_file", "expected a path");
    pc.depth_calibration =
        calibration_from_json(load_json_file(resolve(base_dir, it->get<std::string>())));
  }
  if (const auto it = j.find("depth_calibration"); it != j.end()) {
    pc.depth_calibration = calibration_from_json(*it);
  }
  read(j, "staleness_bound", pc.estimator.staleness_bound);
  if (!(pc.estimator.staleness_bound >= 0.0)) bad("staleness_bound", "must be >= 0");
  if (const auto it = j.find("marker_offset"); it != j.end()) {
    const auto v = numbers(*it, "marker_offset", 3);
    pc.estimator.marker_offset = Vec3(v[0], v[1], v[2]);
  }

  if (const auto it = j.find("ekf"); it != j.end()) {
    if (const auto q = it->find("process_noise"); q != it->end()) pc.ekf.process_noise = diag2(*q, "ekf.process_noise");
    if (const auto r = it->find("measurement_noise"); r != it->end()) {
      pc.ekf.measurement_noise = diag2(*r, "ekf.measurement_noise");
    }
    if (const auto p = it->find("initial_covariance"); p != it->end()) {
      pc.ekf.initial_covariance = diag2(*p, "ekf.initial_covariance");
    }
    if (const auto m = it->find("imu_euler_zyx"); m != it->end()) {
      const auto v = numbers(*m, "ekf.imu_euler_zyx", 3);
      pc.ekf.imu_to_body = euler_zyx_to_rotation({v[0], v[1], v[2]});
    }
    try {
      pc.ekf.validate();
    } catch (const Error& e) {
      bad("ekf", e.what());
    }
  }

  SimulationConfig& sim = cfg.simulation;
  sim.depth_truth = pc.depth_calibration;
  if (const auto it = j.find("simulation"); it != j.end()) {
    if (const auto t = it->find("trajectory"); t != it->end()) read_trajectory(*t, sim.trajectory);
    if (const auto n = it->find("noise"); n != it->end()) {
      if (const auto preset = n->find("preset"); preset != n->end()) {
        if (*preset != "noiseless") bad("simulation.noise.preset", "only \"noiseless\" is known");
        sim.noise = NoiseModel::noiseless();
      }
      read_noise(*n, sim.noise);
    }
    if (const auto f = it->find("follower"); f != it->end()) read_follower(*f, sim.follower);
    if (const auto r = it->find("rates"); r != it->end()) {
      if (const auto preset = r->find("synchronous"); preset != r->end()) {
        if (!preset->is_number_integer()) bad("simulation.rates.synchronous", "expected an integer rate");
        sim.rates = SensorRates::synchronous(preset->get<int>());
      }
      read_rates(*r, sim.rates);
    }
    if (const auto d = it->find("depth_truth"); d != it->end()) sim.depth_truth = calibration_from_json(*d);
    read(*it, "initial_yaw", sim.initial_yaw, "simulation.");
    read(*it, "yaw_wobble_amplitude", sim.yaw_wobble_amplitude, "simulation.");
    read(*it, "yaw_wobble_frequency", sim.yaw_wobble_frequency, "simulation.");
  }
  sim.camera = pc.camera;
  sim.rig = pc.rig;
  sim.tag = pc.tag;

  if (const auto it = j.find("pso"); it != j.end()) read_pso(*it, cfg.pso);

  std::uint64_t seed = 1;
  read(j, "seed", seed);
  cfg.apply_seed(seed);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(load_json_file(path), path.parent_path());
}

RunConfig noiseless_run_config(Pattern pattern, std::uint64_t seed) {
  RunConfig cfg;
  cfg.simulation.trajectory.pattern = pattern;
  cfg.simulation.noise = NoiseModel::noiseless();
  cfg.simulation.rates = SensorRates::synchronous(cfg.simulation.rates.camera);
  cfg.pipeline.ekf.measurement_noise = Mat2::Identity() * 1e-18;
  cfg.apply_seed(seed);
  return cfg;
}

}  // namespace cap
